//! Authorization server: account registry, Argon2id password storage,
//! HS256 access/refresh tokens and refresh-token rotation with family-wide
//! reuse detection.
//!
//! Access tokens are self-contained and never stored. Each login opens a
//! refresh family in the TTL store; exactly one refresh token per family is
//! current, and presenting any superseded one revokes the family.

pub mod error;
pub mod http;
pub mod model;
pub mod password;
pub mod service;
pub mod tokens;
pub mod users;

pub use error::{AuthError, Result};
pub use model::{decode_public_key, decode_verifying_key, Registration, Role, TokenPair, UserAccount, UserProfile};
pub use password::PasswordPolicy;
pub use service::{issue_service_token, AuthConfig, AuthService, RefreshFamily};
pub use tokens::{Claims, TokenCodec};
pub use users::UserDirectory;
