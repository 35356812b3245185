use thiserror::Error;

#[derive(Debug, Error)]
pub enum EimError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("zero mass: {0}")]
    ZeroMass(String),

    #[error("boundary overflow: non-zero activation at ({x}, {y}) within {band} px of a {width}x{height} canvas edge")]
    BoundaryOverflow {
        x: usize,
        y: usize,
        band: usize,
        width: usize,
        height: usize,
    },

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error("value count mismatch: shape {shape:?} needs {expected} values, found {found}")]
    CountMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EimError>;
