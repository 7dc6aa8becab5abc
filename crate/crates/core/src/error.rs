use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operator needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("node index ({i}, {j}) outside {nx}x{ny} grid")]
    IndexOutOfRange { i: usize, j: usize, nx: usize, ny: usize },

    #[error("water height {h:e} at node {index} is not positive")]
    NonPositiveDepth { index: usize, h: f64 },

    #[error("boundary configuration: {0}")]
    Boundary(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
