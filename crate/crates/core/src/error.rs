use thiserror::Error;

/// Errors raised by tensor construction, projections and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at offset {0}")]
    NonFinite(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("axis {axis} out of range for order {order}")]
    AxisOutOfRange { axis: usize, order: usize },

    #[error("graph contains a directed cycle")]
    Cyclic,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
