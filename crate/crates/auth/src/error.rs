use medshare_storage::StorageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("invalid request: {0}")]
    Validation(String),

    #[error("conflict: {0}")]
    Conflict(String),

    /// Returned for unknown emails and wrong passwords alike.
    #[error("invalid email or password")]
    InvalidCredentials,

    #[error("token is malformed")]
    TokenMalformed,

    #[error("token signature is invalid")]
    TokenSignature,

    #[error("token has expired")]
    TokenExpired,

    #[error("token is not of the expected kind")]
    WrongTokenType,

    #[error("refresh token family has been revoked")]
    FamilyRevoked,

    #[error("refresh session not found")]
    SessionNotFound,

    #[error("missing or mismatched CSRF token")]
    Csrf,

    #[error("caller lacks the required role")]
    Forbidden,

    #[error(transparent)]
    Storage(#[from] StorageError),

    #[error("internal error: {0}")]
    Internal(String),
}

impl AuthError {
    /// Stable machine-readable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            AuthError::Validation(_) => "validation",
            AuthError::Conflict(_) => "conflict",
            AuthError::InvalidCredentials => "invalid_credentials",
            AuthError::TokenMalformed => "token_malformed",
            AuthError::TokenSignature => "token_signature",
            AuthError::TokenExpired => "token_expired",
            AuthError::WrongTokenType => "token_type",
            AuthError::FamilyRevoked => "family_revoked",
            AuthError::SessionNotFound => "session_not_found",
            AuthError::Csrf => "csrf",
            AuthError::Forbidden => "forbidden",
            AuthError::Storage(_) | AuthError::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, AuthError>;
