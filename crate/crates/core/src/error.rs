use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A rank-one bookkeeping quantity lost positivity; the caller should
    /// refresh the support state by a direct solve.
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("invalid engine state: {0}")]
    State(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ValseError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ValseError::InvalidArgument(msg.into()))
}
