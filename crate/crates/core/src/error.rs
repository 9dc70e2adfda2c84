use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("payload length mismatch: header promises {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid dimensions {0:?}: every axis needs at least 2 samples")]
    InvalidDims([usize; 3]),

    #[error("invalid spacing {0:?}: every component must be finite and positive")]
    InvalidSpacing([f64; 3]),

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("unknown phantom kind `{0}`")]
    UnknownPhantom(String),

    #[error("{0} supports orthographic cameras only")]
    OrthographicOnly(&'static str),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("volume too large: padded transform side {requested} exceeds limit {limit}")]
    TooLarge { requested: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
