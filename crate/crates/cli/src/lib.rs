//! Verification harness behind the `takai-lab` binary: run configuration,
//! the suite grid, and deterministic JSON/CSV report emission.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{RunConfig, Suite};
pub use report::{emit, CaseReport, EmitFormat, Status, TakaiReport};
pub use suites::run;
