//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("label must be +1 or -1, got {0}")]
    Label(f64),

    #[error("invalid trainer state: {0}")]
    State(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration rejected: {0}")]
    Config(String),

    #[error("numerical PSD violation: quadratic form {form} below tolerance {tolerance}")]
    NumericalPsd { form: f64, tolerance: f64 },

    #[error("rate fit error: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
