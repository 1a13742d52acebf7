use medshare_storage::StorageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("invalid request: {0}")]
    Validation(String),

    #[error("share {0} already holds different key fragments")]
    Conflict(String),

    #[error("no key fragments for share {0}")]
    NotFound(String),

    #[error("missing or invalid service token")]
    Unauthorized,

    #[error(transparent)]
    Storage(#[from] StorageError),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ProxyError {
    pub fn code(&self) -> &'static str {
        match self {
            ProxyError::Validation(_) => "validation",
            ProxyError::Conflict(_) => "conflict",
            ProxyError::NotFound(_) => "not_found",
            ProxyError::Unauthorized => "unauthorized",
            ProxyError::Storage(_) | ProxyError::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, ProxyError>;
