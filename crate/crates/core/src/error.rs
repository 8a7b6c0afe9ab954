use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum VarfracError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular quadrature failed the refinement ratio test: {0}")]
    SuspectedDivergence(String),

    #[error("tridiagonal solve failed at row {0} (vanishing pivot)")]
    SingularPivot(usize),
}

pub type Result<T> = std::result::Result<T, VarfracError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> VarfracError {
    VarfracError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
