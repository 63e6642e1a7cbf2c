use thiserror::Error;

/// Errors produced by the geometry kernel.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid too coarse: need at least {needed} intervals, got {got}")]
    GridTooCoarse { needed: usize, got: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unknown map: {0}")]
    UnknownMap(String),

    #[error("unsupported degree {degree} for {operation}")]
    UnsupportedDegree { operation: &'static str, degree: usize },

    #[error("unknown check: {0}")]
    UnknownCheck(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        CoreError::DimensionMismatch(msg.into())
    }

    pub fn space(msg: impl Into<String>) -> Self {
        CoreError::SpaceMismatch(msg.into())
    }
}
