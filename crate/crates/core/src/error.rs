use thiserror::Error;

/// Errors raised by the samplers, special functions and drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate pair: x and y are identical, take the sticky branch")]
    DegeneratePair,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rejection loop exceeded its cap of {cap} iterations")]
    RejectionCapExceeded { cap: u64 },

    #[error("numerical inversion did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
