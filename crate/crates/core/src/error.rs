use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("observation contains non-finite values")]
    NonFiniteObservation,
    #[error("prediction contains non-finite values")]
    NonFinitePrediction,
    #[error("predictive variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("communication graph is not connected")]
    GraphNotConnected,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
