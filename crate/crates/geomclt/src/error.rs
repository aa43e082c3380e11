use thiserror::Error;

/// Crate-wide error type. Inputs are validated at public entry points;
/// numerical failures deeper in the stack are reported rather than panicking.
#[derive(Debug, Error)]
pub enum Error {
    /// Two points (or a point and a box) disagree on ambient dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A parameter failed validation before any work started.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A linear solve or geometric predicate degenerated past tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Config file parsing or validation failed.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
