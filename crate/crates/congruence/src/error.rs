use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// All outputs identical; the output-kernel bandwidth heuristic is undefined.
    #[error("degenerate outputs: zero sample variance")]
    DegenerateOutputs,

    /// Cholesky factorization failed. The regularized Gram matrix should be
    /// positive definite, so this signals a broken kernel or a nonpositive
    /// regularizer.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("discrete distributions are supported on nonnegative integers, got {0}")]
    NonIntegerCount(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
