use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use jsonwebtoken::errors::ErrorKind;
use jsonwebtoken::{Algorithm, DecodingKey, EncodingKey, Header, Validation};
use medshare_storage::SharedClock;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{AuthError, Result};
use crate::model::Role;

/// Registered claims plus `roles`; `fam` is present only on refresh tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub sub: String,
    pub exp: i64,
    pub iat: i64,
    pub jti: String,
    pub roles: BTreeSet<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fam: Option<String>,
}

impl Claims {
    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    pub fn expires_at(&self) -> DateTime<Utc> {
        Utc.timestamp_opt(self.exp, 0).single().unwrap_or(DateTime::<Utc>::MIN_UTC)
    }
}

/// HS256 signer/verifier. Expiry is judged against the injected clock,
/// not the host clock, so tests can move time.
#[derive(Clone)]
pub struct TokenCodec {
    encoding: EncodingKey,
    decoding: DecodingKey,
    clock: SharedClock,
}

impl std::fmt::Debug for TokenCodec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TokenCodec { .. }")
    }
}

impl TokenCodec {
    pub fn new(secret: &[u8], clock: SharedClock) -> Self {
        Self {
            encoding: EncodingKey::from_secret(secret),
            decoding: DecodingKey::from_secret(secret),
            clock,
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn issue(
        &self,
        sub: &str,
        roles: &BTreeSet<Role>,
        ttl: Duration,
        fam: Option<&str>,
    ) -> Result<(String, Claims)> {
        let now = self.clock.now();
        let claims = Claims {
            sub: sub.to_owned(),
            iat: now.timestamp(),
            exp: (now + ttl).timestamp(),
            jti: Uuid::new_v4().to_string(),
            roles: roles.clone(),
            fam: fam.map(str::to_owned),
        };
        let token = jsonwebtoken::encode(&Header::new(Algorithm::HS256), &claims, &self.encoding)
            .map_err(|e| AuthError::Internal(format!("jwt encode: {e}")))?;
        Ok((token, claims))
    }

    /// Signature and structure only.
    pub fn decode_unchecked_expiry(&self, token: &str) -> Result<Claims> {
        let mut validation = Validation::new(Algorithm::HS256);
        validation.validate_exp = false;
        validation.leeway = 0;
        validation.set_required_spec_claims(&["exp", "sub", "iat", "jti"]);
        jsonwebtoken::decode::<Claims>(token, &self.decoding, &validation)
            .map(|data| data.claims)
            .map_err(|e| match e.kind() {
                ErrorKind::InvalidSignature => AuthError::TokenSignature,
                _ => AuthError::TokenMalformed,
            })
    }

    /// Signature, structure and expiry. A token is expired once the clock
    /// reaches `exp`.
    pub fn decode(&self, token: &str) -> Result<Claims> {
        let claims = self.decode_unchecked_expiry(token)?;
        if self.clock.now().timestamp() >= claims.exp {
            return Err(AuthError::TokenExpired);
        }
        Ok(claims)
    }

    /// Access tokens are the ones without a family claim.
    pub fn verify_access(&self, token: &str) -> Result<Claims> {
        let claims = self.decode(token)?;
        if claims.fam.is_some() {
            return Err(AuthError::WrongTokenType);
        }
        Ok(claims)
    }
}
