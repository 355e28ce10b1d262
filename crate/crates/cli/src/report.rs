//! Report assembly and emission. A report is a pure function of the run
//! configuration (timestamp aside): case order is canonical, maps are sorted,
//! and JSON field order is fixed, so identical configurations produce
//! byte-identical output regardless of thread count.

use crate::config::RunConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        }
    }

    /// Combines with another status, keeping the worse of the two.
    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Warn, _) | (_, Warn) => Warn,
            _ => Pass,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CaseReport {
    pub fn new(name: impl Into<String>) -> Self {
        CaseReport {
            name: name.into(),
            params: BTreeMap::new(),
            status: Status::Pass,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Records a residual-style metric and fails the case when it exceeds
    /// the tolerance. A NaN residual fails.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check_le(&mut self, key: &str, value: f64, tol: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        if !(value <= tol) {
            self.status = self.status.worst(Status::Fail);
            self.notes
                .push(format!("{key} = {value:.3e} exceeds tolerance {tol:.3e}"));
        }
        self
    }

    /// Records a metric that must reach at least `bound`. A NaN value fails.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check_ge(&mut self, key: &str, value: f64, bound: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        if !(value >= bound) {
            self.status = self.status.worst(Status::Fail);
            self.notes.push(format!(
                "{key} = {value:.6} is below the required {bound:.6}"
            ));
        }
        self
    }

    pub fn warn_if(&mut self, condition: bool, text: &str) -> &mut Self {
        if condition {
            self.status = self.status.worst(Status::Warn);
            self.notes.push(text.into());
        }
        self
    }

    pub fn fail(&mut self, text: impl Into<String>) -> &mut Self {
        self.status = Status::Fail;
        self.notes.push(text.into());
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub timestamp: u64,
    pub config: RunConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub conventions: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub warn: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TakaiReport {
    pub meta: ReportMeta,
    pub cases: Vec<CaseReport>,
    pub summary: Summary,
}

impl TakaiReport {
    pub fn assemble(config: &RunConfig, cases: Vec<CaseReport>) -> Self {
        let summary = cases.iter().fold(Summary::default(), |mut acc, c| {
            match c.status {
                Status::Pass => acc.pass += 1,
                Status::Warn => acc.warn += 1,
                Status::Fail => acc.fail += 1,
            }
            acc
        });
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        TakaiReport {
            meta: ReportMeta {
                tool: "takai-lab".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: config.seed,
                timestamp,
                config: config.clone(),
                tolerances: config.resolved_tolerances(),
                conventions: vec![
                    "operational norm: p-norm of the canonical integrated regular representation at every layer".into(),
                    "iterated-layer coefficient algebras use their own integrated form as the designated faithful representation".into(),
                    "estimated-p norms are certified lower bounds; comparisons use matched witnesses".into(),
                    "the tolerance ladder (exact-p vs estimated-p grading) is an artifact choice; the identities themselves are exact".into(),
                ],
            },
            cases,
            summary,
        }
    }

    pub fn any_fail(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// JSON with the timestamp zeroed, for determinism comparisons.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.meta.timestamp = 0;
        copy.to_json_string()
    }

    /// Flat CSV: one row per metric.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("case,metric,value,status\n");
        for case in &self.cases {
            for (metric, value) in &case.metrics {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    case.name,
                    metric,
                    format_float(*value),
                    case.status.as_str()
                ));
            }
        }
        out
    }
}

fn format_float(v: f64) -> String {
    // shortest representation that round-trips keeps the CSV deterministic
    format!("{v}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
}

impl std::str::FromStr for EmitFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(EmitFormat::Json),
            "csv" => Ok(EmitFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// Writes the report to `path` (or stdout when `path` is `-`).
pub fn emit(report: &TakaiReport, format: EmitFormat, path: &str) -> std::io::Result<()> {
    let body = match format {
        EmitFormat::Json => report.to_json_string(),
        EmitFormat::Csv => report.to_csv_string(),
    };
    if path == "-" {
        std::io::stdout().write_all(body.as_bytes())
    } else {
        std::fs::write(Path::new(path), body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid() {
        let report = TakaiReport::assemble(&RunConfig::default(), Vec::new());
        assert_eq!(report.summary.pass, 0);
        assert!(!report.any_fail());
        let json = report.to_json_string();
        assert!(json.contains("\"cases\": []"));
        assert_eq!(report.to_csv_string(), "case,metric,value,status\n");
    }

    #[test]
    fn csv_has_one_row_per_metric() {
        let mut case = CaseReport::new("demo/one");
        case.metric("alpha", 1.5).metric("beta", 0.25);
        let report = TakaiReport::assemble(&RunConfig::default(), vec![case]);
        let csv = report.to_csv_string();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "demo/one,alpha,1.5,pass");
        assert_eq!(lines[2], "demo/one,beta,0.25,pass");
    }

    #[test]
    fn status_combination_and_checks() {
        assert_eq!(Status::Pass.worst(Status::Warn), Status::Warn);
        assert_eq!(Status::Warn.worst(Status::Fail), Status::Fail);
        let mut case = CaseReport::new("demo");
        case.check_le("residual", 1e-9, 1e-12);
        assert_eq!(case.status, Status::Fail);
        let mut case = CaseReport::new("demo");
        case.check_le("residual", 1e-13, 1e-12)
            .check_ge("bound", 2.0, 1.41);
        assert_eq!(case.status, Status::Pass);
        // NaN residuals must fail, never pass silently
        let mut case = CaseReport::new("demo");
        case.check_le("residual", f64::NAN, 1e-12);
        assert_eq!(case.status, Status::Fail);
    }

    #[test]
    fn canonical_json_strips_the_timestamp() {
        let report = TakaiReport::assemble(&RunConfig::default(), Vec::new());
        let canonical = report.to_canonical_json();
        assert!(canonical.contains("\"timestamp\": 0"));
    }
}
