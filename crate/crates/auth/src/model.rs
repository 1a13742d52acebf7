use std::collections::BTreeSet;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use medshare_pre::{PublicKey, VerifyingKey};
use serde::{Deserialize, Serialize};

use crate::error::{AuthError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Patient,
    Practitioner,
    TrustedEntity,
    /// Machine identity for service-to-service calls; never registrable.
    Service,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: String,
    pub name: String,
    pub email: String,
    pub password_hash: String,
    /// Base64 of the 33-byte compressed encryption public key.
    pub public_key: String,
    /// Base64 of the 33-byte compressed ECDSA verifying key.
    pub verifying_key: String,
    pub roles: BTreeSet<Role>,
    pub created_at: DateTime<Utc>,
}

impl UserAccount {
    pub fn public_key(&self) -> Result<PublicKey> {
        decode_public_key(&self.public_key)
    }

    pub fn verifying_key(&self) -> Result<VerifyingKey> {
        decode_verifying_key(&self.verifying_key)
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    pub fn profile(&self) -> UserProfile {
        UserProfile {
            user_id: self.user_id.clone(),
            name: self.name.clone(),
            email: self.email.clone(),
            public_key: self.public_key.clone(),
            verifying_key: self.verifying_key.clone(),
            roles: self.roles.clone(),
        }
    }
}

/// Account view without credentials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub name: String,
    pub email: String,
    pub public_key: String,
    pub verifying_key: String,
    pub roles: BTreeSet<Role>,
}

/// Registration payload. Unknown fields (a `secret_key`, say) reject the
/// whole request.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registration {
    pub name: String,
    pub email: String,
    pub password: String,
    pub public_key: String,
    pub verifying_key: String,
    #[serde(default)]
    pub roles: BTreeSet<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPair {
    pub access_token: String,
    pub refresh_token: String,
    pub csrf_token: String,
    pub access_expires_at: DateTime<Utc>,
    pub refresh_expires_at: DateTime<Utc>,
}

pub(crate) fn decode_b64(field: &str, value: &str) -> Result<Vec<u8>> {
    B64.decode(value.trim())
        .map_err(|_| AuthError::Validation(format!("{field} is not valid base64")))
}

pub fn decode_public_key(value: &str) -> Result<PublicKey> {
    let bytes = decode_b64("public_key", value)?;
    PublicKey::from_bytes(&bytes).map_err(|e| AuthError::Validation(format!("public_key: {e}")))
}

pub fn decode_verifying_key(value: &str) -> Result<VerifyingKey> {
    let bytes = decode_b64("verifying_key", value)?;
    VerifyingKey::from_bytes(&bytes).map_err(|e| AuthError::Validation(format!("verifying_key: {e}")))
}
