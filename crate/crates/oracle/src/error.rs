use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{0}")]
    Validation(String),
    #[error("missing or invalid credentials")]
    Unauthorized,
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    NotFound(String),
    #[error("event log i/o: {0}")]
    Storage(#[from] std::io::Error),
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

impl OracleError {
    /// Stable machine-readable code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::Validation(_) => "validation",
            OracleError::Unauthorized => "unauthorized",
            OracleError::Conflict(_) => "conflict",
            OracleError::NotFound(_) => "not_found",
            OracleError::Storage(_) | OracleError::Corrupt { .. } => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, OracleError>;
