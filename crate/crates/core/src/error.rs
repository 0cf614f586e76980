use thiserror::Error;

/// Errors raised across the decomposition, cost and verification pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CartanError {
    /// An input violated a documented precondition (not unitary, wrong shape, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A numerical kernel could not reach its tolerance.
    #[error("numerical failure in {stage}: residual {residual:e}")]
    NumericalFailure { stage: String, residual: f64 },

    /// A result that should hold by construction did not.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("optimizer did not converge: best endpoint residual {best_residual:e}")]
    NonConvergence { best_residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CartanError>;
