use medshare_storage::StorageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("invalid request: {0}")]
    Validation(String),

    #[error("authentication required: {0}")]
    Unauthorized(String),

    #[error("forbidden: {0}")]
    Forbidden(String),

    #[error("{0} not found")]
    NotFound(String),

    #[error("violates platform rules: {0}")]
    BusinessRule(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("share is {actual}, expected {expected}")]
    State { expected: &'static str, actual: String },

    #[error("file of {size} bytes exceeds the {limit}-byte limit")]
    TooLarge { size: usize, limit: usize },

    #[error("server misconfigured: {0}")]
    Configuration(String),

    #[error("proxy unavailable: {0}")]
    Proxy(String),

    /// A cfrag or the decrypted payload failed verification.
    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("need {needed} capsule fragments, got {got}")]
    Threshold { needed: usize, got: usize },

    #[error(transparent)]
    Storage(#[from] StorageError),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ResourceError {
    pub fn code(&self) -> &'static str {
        match self {
            ResourceError::Validation(_) => "validation",
            ResourceError::Unauthorized(_) => "unauthorized",
            ResourceError::Forbidden(_) => "forbidden",
            ResourceError::NotFound(_) => "not_found",
            ResourceError::BusinessRule(_) => "business_rule",
            ResourceError::Conflict(_) => "conflict",
            ResourceError::State { .. } => "invalid_state",
            ResourceError::TooLarge { .. } => "too_large",
            ResourceError::Configuration(_) => "configuration",
            ResourceError::Proxy(_) => "proxy_unavailable",
            ResourceError::Integrity(_) => "integrity",
            ResourceError::Threshold { .. } => "threshold",
            ResourceError::Storage(_) | ResourceError::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, ResourceError>;

impl From<medshare_auth::AuthError> for ResourceError {
    fn from(e: medshare_auth::AuthError) -> Self {
        match e {
            medshare_auth::AuthError::Storage(s) => ResourceError::Storage(s),
            other => ResourceError::Internal(other.to_string()),
        }
    }
}
