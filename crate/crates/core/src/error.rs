use thiserror::Error;

/// Errors raised by the optimisation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance matrix not positive definite after {escalations} jitter escalations")]
    Factorization { escalations: u32 },

    #[error("hypercube set has no cube intersecting its parent box")]
    EmptyHypercubeSet,

    #[error("objective optimum is unknown")]
    MissingOptimum,

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("benchmark `{0}` requires an explicit dimension")]
    MissingDimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
