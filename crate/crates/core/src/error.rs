use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Index or parameter outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Load factor at or above 1 where an analytic formula needs rho < 1.
    #[error("unstable queue: rho = {rho} but the formula requires 0 <= rho < 1 (lambda < mu)")]
    Instability { rho: f64 },

    /// The requested bound or method does not apply to this queue.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// Two objects that must agree on n (or another dimension) do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed coefficient cache {}:{line}: {reason}", path.display())]
    MalformedCache {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid number {0:?}")]
    InvalidNumber(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
