use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("measure is not barycenter-admissible: {0}")]
    Inadmissible(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("barycenter solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite output: {0}")]
    NonFinite(String),

    #[error("invariant check failed: {0}")]
    CheckFailed(String),

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("relator violation: {0}")]
    Relator(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::DegenerateSupport(_) | Error::NonFinite(_) | Error::CheckFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
