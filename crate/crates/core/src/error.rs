use thiserror::Error;

/// Errors produced by the optimisation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Cholesky factorisation failed at every jitter level tried.
    #[error("kernel matrix factorisation failed (jitter levels tried: {jitters:?})")]
    Factorisation { jitters: Vec<f64> },

    #[error("all {0} candidates are excluded; budget exceeds the discretisation")]
    CandidatesExhausted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
