use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use medshare_auth::{Claims, Role, UserAccount, UserDirectory};
use medshare_pre::{
    decapsulate_original, decapsulate_reencrypted, dem_decrypt_owned, dem_encrypt_with_limit, encapsulate, generate_kfrags,
    Capsule, Ciphertext, KeyPair, PreError, SecretKey, SigningKey, SigningKeyPair, NONCE_SIZE,
};
use medshare_storage::{BlobStore, Collection, DocumentStore, Query, SharedClock};
use rand_core::OsRng;
use serde_json::{json, Map, Value};
use uuid::Uuid;

use crate::error::{ResourceError, Result};
use crate::model::{
    Decision, Direction, EhrListing, EhrRecord, EhrSummary, MediaType, Retrieved, ShareRequest, ShareStatus,
    ShareView, SharedEhr,
};
use crate::proxy_client::{ProxyCallError, ProxyClient};

pub const RECORDS: &str = "ehr_records";
pub const SHARES: &str = "shares";
const SHARE_CLAIMS: &str = "share_claims";

/// Upper bound on kfrags per share.
pub const MAX_SHARES: u16 = 64;

#[derive(Debug, Clone)]
pub struct ResourceConfig {
    pub max_upload_bytes: usize,
    pub sweep_interval: std::time::Duration,
    pub break_glass_threshold: u16,
    pub break_glass_shares: u16,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            max_upload_bytes: 50 * 1024 * 1024,
            sweep_interval: std::time::Duration::from_secs(60),
            break_glass_threshold: 1,
            break_glass_shares: 1,
        }
    }
}

/// Authenticated identity of a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caller {
    pub user_id: String,
    pub roles: BTreeSet<Role>,
}

impl Caller {
    pub fn new(user_id: impl Into<String>, roles: impl IntoIterator<Item = Role>) -> Self {
        Self { user_id: user_id.into(), roles: roles.into_iter().collect() }
    }

    pub fn from_claims(claims: &Claims) -> Self {
        Self { user_id: claims.sub.clone(), roles: claims.roles.clone() }
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }
}

/// Delegator key material, held for the duration of one request.
pub struct OwnerKeys {
    pub secret: SecretKey,
    pub signing: SigningKey,
}

/// Parameters of an accept decision.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptTerms {
    pub expiry: Option<DateTime<Utc>>,
    pub threshold: Option<u16>,
    pub shares: Option<u16>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct ShareClaim {
    share_id: String,
}

pub struct ResourceService {
    config: ResourceConfig,
    records: Collection<EhrRecord>,
    shares: Collection<ShareRequest>,
    claims: Collection<ShareClaim>,
    blobs: Arc<dyn BlobStore>,
    users: UserDirectory,
    proxy: Arc<dyn ProxyClient>,
    clock: SharedClock,
}

fn claim_key(resource_id: &str, delegatee_id: &str) -> String {
    format!("{resource_id}:{delegatee_id}")
}

fn decode_capsule(record: &EhrRecord) -> Result<Capsule> {
    let bytes = B64.decode(&record.capsule).map_err(|_| ResourceError::Integrity("stored capsule".into()))?;
    Capsule::from_bytes(&bytes).map_err(|e| ResourceError::Integrity(format!("stored capsule: {e}")))
}

fn decode_nonce(record: &EhrRecord) -> Result<[u8; NONCE_SIZE]> {
    B64.decode(&record.nonce)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| ResourceError::Integrity("stored nonce".into()))
}

fn internal(e: impl std::fmt::Display) -> ResourceError {
    ResourceError::Internal(e.to_string())
}

impl ResourceService {
    pub fn new(
        config: ResourceConfig,
        documents: Arc<dyn DocumentStore>,
        blobs: Arc<dyn BlobStore>,
        proxy: Arc<dyn ProxyClient>,
        clock: SharedClock,
    ) -> Self {
        Self {
            config,
            records: Collection::new(documents.clone(), RECORDS),
            shares: Collection::new(documents.clone(), SHARES),
            claims: Collection::new(documents.clone(), SHARE_CLAIMS),
            blobs,
            users: UserDirectory::new(documents),
            proxy,
            clock,
        }
    }

    pub fn config(&self) -> &ResourceConfig {
        &self.config
    }

    pub fn users(&self) -> &UserDirectory {
        &self.users
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    fn account(&self, user_id: &str) -> Result<UserAccount> {
        self.users.get(user_id)?.ok_or_else(|| ResourceError::Unauthorized("unknown account".into()))
    }

    fn encryption_keys(account: &UserAccount, secret: &SecretKey) -> Result<KeyPair> {
        let registered = account.public_key().map_err(internal)?;
        if secret.public_key() != registered {
            return Err(ResourceError::Validation("secret key does not match the registered public key".into()));
        }
        Ok(KeyPair::from_secret(secret.clone()))
    }

    fn signing_keys(account: &UserAccount, signing: &SigningKey) -> Result<SigningKeyPair> {
        let registered = account.verifying_key().map_err(internal)?;
        if signing.verifying_key() != registered {
            return Err(ResourceError::Validation("signing key does not match the registered verifying key".into()));
        }
        Ok(SigningKeyPair::from_signing_key(signing.clone()))
    }

    pub fn get_record(&self, resource_id: &str) -> Result<Option<EhrRecord>> {
        Ok(self.records.get(resource_id)?)
    }

    pub fn get_share(&self, share_id: &str) -> Result<Option<ShareRequest>> {
        Ok(self.shares.get(share_id)?)
    }

    /// Sealed body, nonce and capsule exactly as stored.
    pub fn stored_material(&self, resource_id: &str) -> Result<Option<(Vec<u8>, String, String)>> {
        let Some(record) = self.records.get(resource_id)? else { return Ok(None) };
        let body = self.blobs.get(resource_id)?.map(|b| b.to_vec()).unwrap_or_default();
        Ok(Some((body, record.nonce, record.capsule)))
    }

    /// Encrypts under the owner's key and stores the record, then grants
    /// the trusted entity access. If that grant cannot be made the upload
    /// is undone.
    pub async fn upload_ehr(
        &self,
        caller: &Caller,
        keys: &OwnerKeys,
        filename: &str,
        media_type: Option<&str>,
        bytes: Vec<u8>,
    ) -> Result<EhrRecord> {
        if bytes.len() > self.config.max_upload_bytes {
            return Err(ResourceError::TooLarge { size: bytes.len(), limit: self.config.max_upload_bytes });
        }
        let media_type = match media_type {
            Some(m) => MediaType::parse(m),
            None => MediaType::from_filename(filename),
        }
        .ok_or_else(|| ResourceError::Validation("media type must be pdf, png or jpeg".into()))?;
        let filename = filename.trim();
        if filename.is_empty() {
            return Err(ResourceError::Validation("filename must not be empty".into()));
        }

        let owner = self.account(&caller.user_id)?;
        let keypair = Self::encryption_keys(&owner, &keys.secret)?;
        let signer = Self::signing_keys(&owner, &keys.signing)?;
        let trusted = self
            .users
            .trusted_entity()?
            .ok_or_else(|| ResourceError::Configuration("no trusted entity is registered".into()))?;

        let (key, capsule) = encapsulate(&mut OsRng, &keypair.public()).map_err(internal)?;
        let ciphertext = dem_encrypt_with_limit(&mut OsRng, &key, &bytes, &capsule, self.config.max_upload_bytes)
            .map_err(internal)?;
        let record = EhrRecord {
            resource_id: Uuid::new_v4().to_string(),
            owner_id: owner.user_id.clone(),
            filename: filename.to_owned(),
            media_type,
            size_bytes: bytes.len() as u64,
            created_at: self.clock.now(),
            capsule: B64.encode(capsule.to_bytes()),
            nonce: B64.encode(ciphertext.nonce()),
        };
        self.blobs.put(&record.resource_id, ciphertext.into_body())?;
        if let Err(e) = self.records.put(&record.resource_id, &record) {
            let _ = self.blobs.delete(&record.resource_id);
            return Err(e.into());
        }

        if trusted.user_id != owner.user_id {
            if let Err(e) = self.break_glass_bootstrap(&record, &keypair, &signer, &trusted).await {
                tracing::warn!(resource = %record.resource_id, error = %e, "break-glass bootstrap failed; rolling back upload");
                self.records.delete(&record.resource_id)?;
                self.blobs.delete(&record.resource_id)?;
                return Err(e);
            }
        }
        Ok(record)
    }

    /// Creates an accepted, non-expiring share from the owner to the
    /// trusted entity and hands its kfrags to the proxy.
    async fn break_glass_bootstrap(
        &self,
        record: &EhrRecord,
        owner: &KeyPair,
        signer: &SigningKeyPair,
        trusted: &UserAccount,
    ) -> Result<ShareRequest> {
        let (t, n) = (self.config.break_glass_threshold, self.config.break_glass_shares);
        let trusted_pk = trusted.public_key().map_err(internal)?;
        let kfrags = generate_kfrags(&mut OsRng, owner, signer, &trusted_pk, usize::from(t), usize::from(n))
            .map_err(|e| ResourceError::Configuration(e.to_string()))?;
        let now = self.clock.now();
        let share = ShareRequest {
            share_id: Uuid::new_v4().to_string(),
            resource_id: record.resource_id.clone(),
            delegator_id: record.owner_id.clone(),
            delegatee_id: trusted.user_id.clone(),
            status: ShareStatus::Accepted,
            expiry: None,
            break_glass: true,
            threshold: Some(t),
            shares: Some(n),
            created_at: now,
            updated_at: now,
        };
        self.proxy.store_kfrags(&share.share_id, &kfrags, t, n).await.map_err(proxy_error)?;
        let persisted = self
            .claims
            .insert(&claim_key(&share.resource_id, &share.delegatee_id), &ShareClaim { share_id: share.share_id.clone() })
            .and_then(|_| self.shares.put(&share.share_id, &share));
        if let Err(e) = persisted {
            let _ = self.proxy.delete_kfrags(&share.share_id).await;
            let _ = self.claims.delete(&claim_key(&share.resource_id, &share.delegatee_id));
            return Err(e.into());
        }
        Ok(share)
    }

    pub async fn request_share(&self, caller: &Caller, resource_id: &str) -> Result<ShareRequest> {
        self.account(&caller.user_id)?;
        let record = self.records.get(resource_id)?.ok_or_else(|| ResourceError::NotFound("record".into()))?;
        if record.owner_id == caller.user_id {
            return Err(ResourceError::BusinessRule("owners cannot request access to their own records".into()));
        }
        let now = self.clock.now();
        let share = ShareRequest {
            share_id: Uuid::new_v4().to_string(),
            resource_id: record.resource_id.clone(),
            delegator_id: record.owner_id.clone(),
            delegatee_id: caller.user_id.clone(),
            status: ShareStatus::Pending,
            expiry: None,
            break_glass: false,
            threshold: None,
            shares: None,
            created_at: now,
            updated_at: now,
        };
        let claim = ShareClaim { share_id: share.share_id.clone() };
        if !self.claims.insert(&claim_key(&record.resource_id, &caller.user_id), &claim)? {
            return Err(ResourceError::Conflict("a pending or accepted request already exists".into()));
        }
        self.shares.put(&share.share_id, &share)?;
        Ok(share)
    }

    fn load_share_as_delegator(&self, caller: &Caller, share_id: &str) -> Result<ShareRequest> {
        let share = self.shares.get(share_id)?.ok_or_else(|| ResourceError::NotFound("share".into()))?;
        if share.delegator_id != caller.user_id {
            return Err(ResourceError::Forbidden("only the record owner can do this".into()));
        }
        Ok(share)
    }

    /// Atomic status change; false if another transition got there first.
    fn transition(&self, share: &ShareRequest, to: ShareStatus, mut patch: Map<String, Value>) -> Result<bool> {
        patch.insert("status".into(), json!(to));
        patch.insert("updated_at".into(), json!(self.clock.now()));
        let swapped = self.shares.compare_and_update(&share.share_id, "status", &json!(share.status), &patch)?;
        if swapped && to.is_terminal() {
            self.claims.delete(&claim_key(&share.resource_id, &share.delegatee_id))?;
        }
        Ok(swapped)
    }

    fn state_error(&self, share_id: &str, expected: &'static str) -> ResourceError {
        let actual = self
            .shares
            .get(share_id)
            .ok()
            .flatten()
            .map_or_else(|| "missing".to_owned(), |s| s.status.as_str().to_owned());
        ResourceError::State { expected, actual }
    }

    pub async fn answer_share(
        &self,
        caller: &Caller,
        share_id: &str,
        decision: Decision,
        keys: Option<&OwnerKeys>,
        terms: AcceptTerms,
    ) -> Result<ShareRequest> {
        let share = self.load_share_as_delegator(caller, share_id)?;
        if share.status != ShareStatus::Pending {
            return Err(ResourceError::State { expected: "pending", actual: share.status.as_str().into() });
        }

        if decision == Decision::Decline {
            if !self.transition(&share, ShareStatus::Declined, Map::new())? {
                return Err(self.state_error(share_id, "pending"));
            }
            return self.shares.get(share_id)?.ok_or_else(|| ResourceError::NotFound("share".into()));
        }

        let keys = keys.ok_or_else(|| ResourceError::Validation("accepting requires the owner's keys".into()))?;
        let threshold = terms.threshold.unwrap_or(1);
        let shares = terms.shares.unwrap_or(threshold.max(1));
        if threshold == 0 || threshold > shares || shares > MAX_SHARES {
            return Err(ResourceError::Validation(format!(
                "need 1 <= threshold <= shares <= {MAX_SHARES}, got {threshold} of {shares}"
            )));
        }
        let now = self.clock.now();
        if let Some(expiry) = terms.expiry {
            if expiry <= now {
                return Err(ResourceError::Validation("expiry must be in the future".into()));
            }
        }
        let owner = self.account(&caller.user_id)?;
        let keypair = Self::encryption_keys(&owner, &keys.secret)?;
        let signer = Self::signing_keys(&owner, &keys.signing)?;
        let delegatee = self.users.get(&share.delegatee_id)?.ok_or_else(|| ResourceError::NotFound("delegatee".into()))?;
        let delegatee_pk = delegatee.public_key().map_err(internal)?;

        let kfrags = generate_kfrags(&mut OsRng, &keypair, &signer, &delegatee_pk, threshold.into(), shares.into())
            .map_err(internal)?;
        self.proxy.store_kfrags(share_id, &kfrags, threshold, shares).await.map_err(proxy_error)?;

        let mut patch = Map::new();
        patch.insert("expiry".into(), json!(terms.expiry.map(|e| e.timestamp_millis())));
        patch.insert("threshold".into(), json!(threshold));
        patch.insert("shares".into(), json!(shares));
        if !self.transition(&share, ShareStatus::Accepted, patch)? {
            // Lost to a concurrent answer; take back what we handed out.
            let _ = self.proxy.delete_kfrags(share_id).await;
            return Err(self.state_error(share_id, "pending"));
        }
        self.shares.get(share_id)?.ok_or_else(|| ResourceError::NotFound("share".into()))
    }

    /// Deletes the proxy's kfrags before recording the revocation, so once
    /// this returns no further re-encapsulation can succeed.
    pub async fn revoke_share(&self, caller: &Caller, share_id: &str) -> Result<ShareRequest> {
        let share = self.load_share_as_delegator(caller, share_id)?;
        if share.break_glass {
            return Err(ResourceError::Forbidden("break-glass access cannot be revoked by the owner".into()));
        }
        if share.status != ShareStatus::Accepted {
            return Err(ResourceError::State { expected: "accepted", actual: share.status.as_str().into() });
        }
        self.proxy.delete_kfrags(share_id).await.map_err(proxy_error)?;
        if !self.transition(&share, ShareStatus::Revoked, Map::new())? {
            return Err(self.state_error(share_id, "accepted"));
        }
        self.shares.get(share_id)?.ok_or_else(|| ResourceError::NotFound("share".into()))
    }

    pub async fn sweep_expired(&self) -> Result<usize> {
        self.sweep_expired_at(self.clock.now()).await
    }

    /// Expires every accepted share whose expiry lies before `now`. Shares
    /// whose kfrags could not be deleted stay accepted for the next run.
    pub async fn sweep_expired_at(&self, now: DateTime<Utc>) -> Result<usize> {
        let due = self
            .shares
            .query(&Query::all().eq("status", ShareStatus::Accepted.as_str()).lt("expiry", now.timestamp_millis()))?;
        let mut expired = 0;
        for share in due {
            if let Err(e) = self.proxy.delete_kfrags(&share.share_id).await {
                tracing::warn!(share = %share.share_id, error = %e, "sweep could not delete kfrags; will retry");
                continue;
            }
            if self.transition(&share, ShareStatus::Expired, Map::new())? {
                expired += 1;
            }
        }
        Ok(expired)
    }

    pub async fn retrieve_ehr(&self, caller: &Caller, resource_id: &str, secret: &SecretKey) -> Result<Retrieved> {
        let record = self.records.get(resource_id)?.ok_or_else(|| ResourceError::NotFound("record".into()))?;
        let account = self.account(&caller.user_id)?;
        let capsule = decode_capsule(&record)?;
        let nonce = decode_nonce(&record)?;

        let (key, via_proxy) = if record.owner_id == caller.user_id {
            let keypair = Self::encryption_keys(&account, secret)?;
            (decapsulate_original(keypair.secret(), &capsule).map_err(|e| ResourceError::Integrity(e.to_string()))?, false)
        } else {
            let now = self.clock.now();
            let grant = self
                .shares
                .query(
                    &Query::all()
                        .eq("resource_id", resource_id)
                        .eq("delegatee_id", caller.user_id.as_str())
                        .eq("status", ShareStatus::Accepted.as_str()),
                )?
                .into_iter()
                .find(|s| s.grants_access_at(now))
                .ok_or_else(|| ResourceError::Forbidden("no live share grants access to this record".into()))?;
            let keypair = Self::encryption_keys(&account, secret)?;
            let delegator = self.users.get(&grant.delegator_id)?.ok_or_else(|| internal("delegator account missing"))?;
            let delegator_pk = delegator.public_key().map_err(internal)?;
            let delegator_vk = delegator.verifying_key().map_err(internal)?;

            let cfrags = self.proxy.reencapsulate(&grant.share_id, &capsule).await.map_err(|e| match e {
                ProxyCallError::NotFound => ResourceError::Forbidden("share is no longer live".into()),
                ProxyCallError::Rejected(m) => ResourceError::Integrity(m),
                ProxyCallError::Unavailable(m) => ResourceError::Proxy(m),
            })?;
            let key = decapsulate_reencrypted(&keypair, &delegator_pk, &delegator_vk, &capsule, &cfrags)
                .map_err(|e| match e {
                    PreError::Threshold { needed, got } => ResourceError::Threshold { needed, got },
                    other => ResourceError::Integrity(other.to_string()),
                })?;
            (key, true)
        };

        let body = self.blobs.get(resource_id)?.ok_or_else(|| ResourceError::Integrity("record body missing".into()))?;
        let ciphertext = Ciphertext::from_parts(nonce, body.to_vec(), &capsule);
        let bytes = dem_decrypt_owned(&key, ciphertext).map_err(|_| ResourceError::Integrity("decryption failed".into()))?;
        Ok(Retrieved { record: EhrSummary::from(&record), bytes, via_proxy })
    }

    pub fn list_ehrs(&self, caller: &Caller) -> Result<EhrListing> {
        let mut owned: Vec<EhrSummary> = self
            .records
            .query(&Query::all().eq("owner_id", caller.user_id.as_str()))?
            .iter()
            .map(EhrSummary::from)
            .collect();
        owned.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.resource_id.cmp(&b.resource_id)));

        let now = self.clock.now();
        let mut shared = Vec::new();
        let grants = self.shares.query(
            &Query::all().eq("delegatee_id", caller.user_id.as_str()).eq("status", ShareStatus::Accepted.as_str()),
        )?;
        for share in grants.into_iter().filter(|s| s.grants_access_at(now)) {
            if let Some(record) = self.records.get(&share.resource_id)? {
                shared.push(SharedEhr {
                    record: EhrSummary::from(&record),
                    share_id: share.share_id,
                    expiry: share.expiry,
                    break_glass: share.break_glass,
                });
            }
        }
        shared.sort_by(|a, b| a.record.created_at.cmp(&b.record.created_at).then_with(|| a.share_id.cmp(&b.share_id)));
        Ok(EhrListing { owned, shared })
    }

    /// Break-glass shares are listed only to the trusted entity.
    pub fn list_share_requests(&self, caller: &Caller, direction: Direction) -> Result<Vec<ShareView>> {
        let field = match direction {
            Direction::Incoming => "delegator_id",
            Direction::Outgoing => "delegatee_id",
        };
        let show_break_glass = caller.has_role(Role::TrustedEntity);
        let mut shares: Vec<ShareRequest> = self
            .shares
            .query(&Query::all().eq(field, caller.user_id.as_str()))?
            .into_iter()
            .filter(|s| show_break_glass || !s.break_glass)
            .collect();
        // Pending first, then most recently updated.
        shares.sort_by(|a, b| {
            (b.status == ShareStatus::Pending)
                .cmp(&(a.status == ShareStatus::Pending))
                .then_with(|| b.updated_at.cmp(&a.updated_at))
                .then_with(|| a.share_id.cmp(&b.share_id))
        });

        let mut names: HashMap<String, Option<String>> = HashMap::new();
        let mut name_of = |id: &str| -> Result<Option<String>> {
            if let Some(n) = names.get(id) {
                return Ok(n.clone());
            }
            let n = self.users.get(id)?.map(|u| u.name);
            names.insert(id.to_owned(), n.clone());
            Ok(n)
        };
        shares
            .into_iter()
            .map(|share| {
                let filename = self.records.get(&share.resource_id)?.map(|r| r.filename);
                Ok(ShareView {
                    delegator_name: name_of(&share.delegator_id)?,
                    delegatee_name: name_of(&share.delegatee_id)?,
                    filename,
                    share,
                })
            })
            .collect()
    }

    /// Every share, for audits and tests.
    pub fn all_shares(&self) -> Result<Vec<ShareRequest>> {
        Ok(self.shares.query(&Query::all())?)
    }
}

fn proxy_error(e: ProxyCallError) -> ResourceError {
    match e {
        ProxyCallError::Unavailable(m) => ResourceError::Proxy(m),
        ProxyCallError::Rejected(m) => ResourceError::Proxy(format!("rejected: {m}")),
        ProxyCallError::NotFound => ResourceError::Proxy("share unknown to proxy".into()),
    }
}

/// Runs the expiry sweep on a fixed period until the task is aborted.
pub fn spawn_sweeper(service: Arc<ResourceService>) -> tokio::task::JoinHandle<()> {
    let period = service.config.sweep_interval;
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            ticker.tick().await;
            match service.sweep_expired().await {
                Ok(0) => {}
                Ok(n) => tracing::info!(expired = n, "expiry sweep"),
                Err(e) => tracing::warn!(error = %e, "expiry sweep failed"),
            }
        }
    })
}
