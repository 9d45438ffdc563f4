use thiserror::Error;

#[derive(Debug, Error)]
pub enum QslError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl QslError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        QslError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, QslError>;
