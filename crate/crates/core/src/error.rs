use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("point is off the manifold: |deviation| = {deviation:e} exceeds {tolerance:e}")]
    OffManifold { deviation: f64, tolerance: f64 },

    #[error("point lies within {tolerance:e} of the chart singularity")]
    ChartSingularity { tolerance: f64 },

    #[error("numeric metric is not positive definite")]
    DegenerateMetric,

    #[error("numeric flow Jacobian is singular")]
    DegenerateFlow,

    #[error("flow chain has no closed-form inverse; this operation needs an empty chain")]
    NonInvertibleFlow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid data rows {rows:?}: {reason}")]
    DataValidation { rows: Vec<usize>, reason: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
