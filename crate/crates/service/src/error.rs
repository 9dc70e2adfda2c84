use thiserror::Error;
use volren_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown volume `{0}`")]
    NotFound(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("request too large: {0}")]
    TooLarge(String),

    #[error("render exceeded the {0:.1} s timeout")]
    Timeout(f64),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) => 404,
            ServiceError::BadRequest(_) => 400,
            ServiceError::TooLarge(_) => 413,
            ServiceError::Timeout(_) => 504,
            ServiceError::Internal(_) => 500,
        }
    }
}

impl From<CoreError> for ServiceError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::OrthographicOnly(_)
            | CoreError::InvalidCamera(_)
            | CoreError::InvalidParameter(_)
            | CoreError::InvalidTransferFunction(_)
            | CoreError::UnknownPhantom(_)
            | CoreError::InvalidDims(_)
            | CoreError::InvalidSpacing(_) => ServiceError::BadRequest(e.to_string()),
            CoreError::TooLarge { .. } => ServiceError::TooLarge(e.to_string()),
            CoreError::Io(_)
            | CoreError::Format { .. }
            | CoreError::LengthMismatch { .. }
            | CoreError::Mismatch(_) => ServiceError::Internal(e.to_string()),
        }
    }
}
