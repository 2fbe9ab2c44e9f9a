//! Error type shared across the library.

/// Errors produced by model construction, filtering, and estimation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input data violate a precondition (length, alignment, missing values).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The innovation covariance is numerically singular at a given step.
    #[error("singular innovation covariance at step {step} (condition number {cond:.3e})")]
    SingularInnovation { step: usize, cond: f64 },

    /// A numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Estimation could not start or made no progress.
    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
