use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector {index} has norm {norm}, which is not within {tol:e} of 1")]
    NotUnit { index: usize, norm: f64, tol: f64 },

    #[error("exponent must be a positive finite real, got {0}")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotUnit { .. } => "not_unit",
            Error::InvalidExponent(_) => "invalid_exponent",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Budget(_) => "budget",
            Error::NoConvergence(_) => "no_convergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
