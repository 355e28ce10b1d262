//! Desk-scale computational model of `L^p` operator crossed products of
//! finite Abelian groups.
//!
//! The crate builds every layer of the duality chain concretely — finite
//! groups and their characters ([`group`]), complex matrices with `p -> p`
//! operator norms ([`pnorm`]), coefficient algebras with isometric actions
//! ([`algebra`]), twisted convolution algebras with integrated regular
//! representations ([`crossed`]) — and wires them into the chain maps,
//! equivariance checks and Gelfand diagnostics of [`takai`].

pub mod algebra;
pub mod crossed;
pub mod error;
pub mod group;
pub mod mat;
pub mod pnorm;
pub mod sample;
pub mod takai;

pub use error::{Error, Result};
