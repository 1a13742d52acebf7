use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use base64::engine::general_purpose::{STANDARD as B64, URL_SAFE_NO_PAD as B64URL};
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use medshare_storage::{DocumentStore, SharedClock, TtlStore};
use rand_core::{OsRng, RngCore};
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use uuid::Uuid;

use crate::error::{AuthError, Result};
use crate::model::{decode_public_key, decode_verifying_key, Registration, Role, TokenPair, UserAccount};
use crate::password::PasswordPolicy;
use crate::tokens::{Claims, TokenCodec};
use crate::users::{Reservation, UserDirectory};

#[derive(Clone)]
pub struct AuthConfig {
    pub jwt_secret: Vec<u8>,
    pub access_ttl: Duration,
    pub refresh_ttl: Duration,
    pub service_ttl: Duration,
    pub password: PasswordPolicy,
}

impl std::fmt::Debug for AuthConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuthConfig")
            .field("access_ttl", &self.access_ttl)
            .field("refresh_ttl", &self.refresh_ttl)
            .field("service_ttl", &self.service_ttl)
            .field("password", &self.password)
            .finish_non_exhaustive()
    }
}

impl AuthConfig {
    pub fn new(jwt_secret: impl Into<Vec<u8>>) -> Self {
        Self {
            jwt_secret: jwt_secret.into(),
            access_ttl: Duration::minutes(15),
            refresh_ttl: Duration::days(7),
            service_ttl: Duration::hours(1),
            password: PasswordPolicy::default(),
        }
    }

    pub fn with_password_policy(mut self, policy: PasswordPolicy) -> Self {
        self.password = policy;
        self
    }
}

/// Persisted per login; the value under `refresh-family:{family_id}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefreshFamily {
    pub family_id: String,
    pub user_id: String,
    pub current_token_id: String,
    pub revoked: bool,
    pub csrf: String,
    pub expires_at: DateTime<Utc>,
}

fn family_key(family_id: &str) -> String {
    format!("refresh-family:{family_id}")
}

pub fn random_token() -> String {
    let mut buf = [0u8; 32];
    OsRng.fill_bytes(&mut buf);
    B64URL.encode(buf)
}

pub struct AuthService {
    config: AuthConfig,
    users: UserDirectory,
    families: Arc<dyn TtlStore>,
    codec: TokenCodec,
    dummy_hash: OnceLock<String>,
}

impl AuthService {
    pub fn new(
        config: AuthConfig,
        documents: Arc<dyn DocumentStore>,
        families: Arc<dyn TtlStore>,
        clock: SharedClock,
    ) -> Self {
        let codec = TokenCodec::new(&config.jwt_secret, clock);
        Self { config, users: UserDirectory::new(documents), families, codec, dummy_hash: OnceLock::new() }
    }

    pub fn config(&self) -> &AuthConfig {
        &self.config
    }

    pub fn users(&self) -> &UserDirectory {
        &self.users
    }

    pub fn codec(&self) -> &TokenCodec {
        &self.codec
    }

    pub fn register(&self, reg: Registration) -> Result<UserAccount> {
        let name = reg.name.trim();
        if name.is_empty() {
            return Err(AuthError::Validation("name must not be empty".into()));
        }
        let email = reg.email.trim();
        if !email.contains('@') || email.len() < 3 {
            return Err(AuthError::Validation("email is not valid".into()));
        }
        self.config.password.check(&reg.password)?;
        let public_key = decode_public_key(&reg.public_key)?;
        let verifying_key = decode_verifying_key(&reg.verifying_key)?;
        let mut roles = reg.roles;
        if roles.contains(&Role::Service) {
            return Err(AuthError::Validation("role `service` cannot be registered".into()));
        }
        if roles.is_empty() {
            roles.insert(Role::Patient);
        }

        let account = UserAccount {
            user_id: Uuid::new_v4().to_string(),
            name: name.to_owned(),
            email: email.to_owned(),
            password_hash: self.config.password.hash(&reg.password)?,
            public_key: B64.encode(public_key.to_bytes()),
            verifying_key: B64.encode(verifying_key.to_bytes()),
            roles,
            created_at: self.codec.now(),
        };
        match self.users.create(&account)? {
            Reservation::Ok => Ok(account),
            Reservation::EmailTaken => Err(AuthError::Conflict("email already registered".into())),
            Reservation::TrustedEntityTaken => {
                Err(AuthError::Conflict("a trusted entity is already registered".into()))
            }
        }
    }

    fn dummy_hash(&self) -> &str {
        self.dummy_hash.get_or_init(|| {
            self.config.password.hash("timing-equaliser-password").unwrap_or_default()
        })
    }

    /// Unknown emails still pay for one hash verification.
    pub fn login(&self, email: &str, password: &str) -> Result<(UserAccount, TokenPair)> {
        let account = self.users.by_email(email)?;
        let hash = account.as_ref().map(|a| a.password_hash.as_str()).unwrap_or_else(|| self.dummy_hash());
        let ok = self.config.password.verify(password, hash);
        let account = match (account, ok) {
            (Some(a), true) => a,
            _ => return Err(AuthError::InvalidCredentials),
        };

        let family_id = Uuid::new_v4().to_string();
        let (pair, refresh) = self.issue_pair(&account.user_id, &account.roles, &family_id)?;
        let family = RefreshFamily {
            family_id: family_id.clone(),
            user_id: account.user_id.clone(),
            current_token_id: refresh.jti,
            revoked: false,
            csrf: pair.csrf_token.clone(),
            expires_at: pair.refresh_expires_at,
        };
        self.families.set(&family_key(&family_id), encode_family(&family)?, self.config.refresh_ttl)?;
        Ok((account, pair))
    }

    fn issue_pair(&self, sub: &str, roles: &BTreeSet<Role>, family_id: &str) -> Result<(TokenPair, Claims)> {
        let (access_token, access) = self.codec.issue(sub, roles, self.config.access_ttl, None)?;
        let (refresh_token, refresh) = self.codec.issue(sub, roles, self.config.refresh_ttl, Some(family_id))?;
        let pair = TokenPair {
            access_token,
            refresh_token,
            csrf_token: random_token(),
            access_expires_at: access.expires_at(),
            refresh_expires_at: refresh.expires_at(),
        };
        Ok((pair, refresh))
    }

    fn refresh_claims(&self, token: &str, check_expiry: bool) -> Result<(Claims, String)> {
        let claims = if check_expiry {
            self.codec.decode(token)?
        } else {
            self.codec.decode_unchecked_expiry(token)?
        };
        let fam = claims.fam.clone().ok_or(AuthError::WrongTokenType)?;
        Ok((claims, fam))
    }

    fn load_family(&self, family_id: &str) -> Result<Option<(Vec<u8>, RefreshFamily)>> {
        match self.families.get(&family_key(family_id))? {
            Some(raw) => {
                let fam = serde_json::from_slice(&raw)
                    .map_err(|e| AuthError::Internal(format!("refresh family record: {e}")))?;
                Ok(Some((raw, fam)))
            }
            None => Ok(None),
        }
    }

    /// Marks the family revoked; the record is kept until it expires so
    /// later presentations keep failing.
    fn revoke_family(&self, family_id: &str) -> Result<()> {
        loop {
            let Some((raw, mut fam)) = self.load_family(family_id)? else { return Ok(()) };
            if fam.revoked {
                return Ok(());
            }
            fam.revoked = true;
            if self.families.compare_and_swap(&family_key(family_id), &raw, encode_family(&fam)?, None)? {
                return Ok(());
            }
        }
    }

    /// Rotation: the presented token must be the family's current one. A
    /// superseded token (or losing a concurrent rotation) revokes the family.
    pub fn refresh(&self, refresh_token: &str) -> Result<TokenPair> {
        let (claims, family_id) = self.refresh_claims(refresh_token, true)?;
        let (raw, fam) = self.load_family(&family_id)?.ok_or(AuthError::SessionNotFound)?;
        if fam.revoked {
            return Err(AuthError::FamilyRevoked);
        }
        if fam.user_id != claims.sub {
            return Err(AuthError::TokenMalformed);
        }
        if fam.current_token_id != claims.jti {
            tracing::warn!(family = %family_id, "refresh token reuse detected; revoking family");
            self.revoke_family(&family_id)?;
            return Err(AuthError::FamilyRevoked);
        }

        let (pair, refresh) = self.issue_pair(&claims.sub, &claims.roles, &family_id)?;
        let next = RefreshFamily {
            current_token_id: refresh.jti,
            csrf: pair.csrf_token.clone(),
            expires_at: pair.refresh_expires_at,
            ..fam
        };
        let swapped = self.families.compare_and_swap(
            &family_key(&family_id),
            &raw,
            encode_family(&next)?,
            Some(self.config.refresh_ttl),
        )?;
        if !swapped {
            tracing::warn!(family = %family_id, "concurrent refresh lost the race; revoking family");
            self.revoke_family(&family_id)?;
            return Err(AuthError::FamilyRevoked);
        }
        Ok(pair)
    }

    /// Checks the CSRF token bound to the refresh token's family. Families
    /// that no longer exist have nothing to protect.
    pub fn check_csrf(&self, refresh_token: &str, csrf: Option<&str>) -> Result<()> {
        let (_, family_id) = self.refresh_claims(refresh_token, false)?;
        let Some((_, fam)) = self.load_family(&family_id)? else { return Ok(()) };
        match csrf {
            Some(c) if constant_time_eq(c.as_bytes(), fam.csrf.as_bytes()) => Ok(()),
            _ => Err(AuthError::Csrf),
        }
    }

    /// Idempotent. Expired but well-signed tokens are accepted.
    pub fn logout(&self, refresh_token: &str) -> Result<()> {
        let (_, family_id) = self.refresh_claims(refresh_token, false)?;
        self.revoke_family(&family_id)
    }

    pub fn verify_access_token(&self, token: &str) -> Result<Claims> {
        self.codec.verify_access(token)
    }

    /// Short-lived bearer for service-to-service calls.
    pub fn issue_service_token(&self, service: &str) -> Result<String> {
        issue_service_token(&self.codec, service, self.config.service_ttl)
    }

    pub fn family(&self, family_id: &str) -> Result<Option<RefreshFamily>> {
        Ok(self.load_family(family_id)?.map(|(_, f)| f))
    }
}

pub fn issue_service_token(codec: &TokenCodec, service: &str, ttl: Duration) -> Result<String> {
    let roles = [Role::Service].into_iter().collect();
    Ok(codec.issue(&format!("service:{service}"), &roles, ttl, None)?.0)
}

fn encode_family(f: &RefreshFamily) -> Result<Vec<u8>> {
    serde_json::to_vec(f).map_err(|e| AuthError::Internal(e.to_string()))
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.ct_eq(b).into()
}
