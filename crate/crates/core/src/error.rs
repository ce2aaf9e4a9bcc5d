use thiserror::Error;

/// Errors raised anywhere in the estimation and testing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument was NaN or infinite, or outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model parameters (non-positive scale, non-finite fields).
    #[error("invalid parameters: {0}")]
    Parameter(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("integration failed: {reason} (estimated error {abs_error:.3e})")]
    Integration { reason: String, abs_error: f64 },

    /// A matrix that must be inverted is singular or too badly conditioned.
    #[error("ill-conditioned matrix: condition number {condition:.3e} exceeds {limit:.1e}")]
    Conditioning { condition: f64, limit: f64 },

    /// A series or iteration exceeded its term cap.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The data cannot support a fit (empty, constant, too few rows).
    #[error("degenerate data: {0}")]
    Data(String),

    /// The optimizer drove the scale parameter to the boundary.
    #[error("scale parameter collapsed to the boundary (sigma = {sigma:.3e})")]
    Boundary { sigma: f64 },

    /// Inconsistent configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}
