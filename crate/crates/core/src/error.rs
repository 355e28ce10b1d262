use thiserror::Error;

/// Errors surfaced by the algebraic and numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
