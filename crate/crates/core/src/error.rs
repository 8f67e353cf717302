use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigenvalue iteration did not converge")]
    NonConvergence,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("matrix {name} is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { name: String, asymmetry: f64 },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension {0} too large for exhaustive grid search (max 3)")]
    DimensionTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
