use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdnnError {
    /// Invalid sizes or settings supplied when constructing an object.
    #[error("configuration error: {0}")]
    Config(String),
    /// Arguments that do not fit the object they are applied to.
    #[error("usage error: {0}")]
    Usage(String),
    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

pub type Result<T, E = QdnnError> = std::result::Result<T, E>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(QdnnError::Config(msg.into()))
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(QdnnError::Usage(msg.into()))
}
