use thiserror::Error;

use crate::services::ServiceError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scene generation failed: {0}")]
    Generation(String),
    #[error("oracle cannot answer: {0}")]
    Oracle(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
