use std::sync::Arc;

use chrono::{DateTime, Utc};
use medshare_pre::{reencapsulate, Capsule, CapsuleFragment, KeyFragment};
use medshare_storage::{Collection, DocumentStore, SharedClock};
use rand_core::OsRng;
use serde::{Deserialize, Serialize};

use crate::api;
use crate::error::{ProxyError, Result};

pub const VAULT: &str = "kfrags";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultEntry {
    pub share_id: String,
    /// Base64 kfrag encodings, in the order received.
    pub kfrags: Vec<String>,
    pub threshold: u16,
    pub shares: u16,
    pub stored_at: DateTime<Utc>,
}

impl VaultEntry {
    fn same_payload(&self, other: &VaultEntry) -> bool {
        self.kfrags == other.kfrags && self.threshold == other.threshold && self.shares == other.shares
    }
}

/// Holds kfrags by share id and applies them to capsules. Never sees a
/// secret key, a ciphertext body or a symmetric key.
pub struct ProxyService {
    vault: Collection<VaultEntry>,
    clock: SharedClock,
}

impl ProxyService {
    pub fn new(store: Arc<dyn DocumentStore>, clock: SharedClock) -> Self {
        Self { vault: Collection::new(store, VAULT), clock }
    }

    pub fn store_kfrags(&self, share_id: &str, kfrags: &[KeyFragment], threshold: u16, shares: u16) -> Result<()> {
        let encoded: Vec<String> = kfrags.iter().map(|k| api::encode(&k.to_bytes())).collect();
        self.store_encoded(share_id, encoded, threshold, shares)
    }

    /// Idempotent for an identical payload; a different payload under the
    /// same share id is a conflict.
    pub fn store_encoded(&self, share_id: &str, kfrags: Vec<String>, threshold: u16, shares: u16) -> Result<()> {
        if share_id.is_empty() {
            return Err(ProxyError::Validation("share_id must not be empty".into()));
        }
        if threshold == 0 || threshold > shares {
            return Err(ProxyError::Validation(format!(
                "need 1 <= threshold <= shares, got {threshold} of {shares}"
            )));
        }
        if kfrags.len() != usize::from(shares) {
            return Err(ProxyError::Validation(format!(
                "expected {shares} kfrags, got {}",
                kfrags.len()
            )));
        }
        for (i, k) in kfrags.iter().enumerate() {
            let frag = api::decode(k)
                .and_then(|b| KeyFragment::from_bytes(&b).ok())
                .ok_or_else(|| ProxyError::Validation(format!("kfrag {i} does not decode")))?;
            if frag.threshold() != usize::from(threshold) {
                return Err(ProxyError::Validation(format!("kfrag {i} was made for another threshold")));
            }
        }

        let entry = VaultEntry {
            share_id: share_id.to_owned(),
            kfrags,
            threshold,
            shares,
            stored_at: self.clock.now(),
        };
        if self.vault.insert(share_id, &entry)? {
            return Ok(());
        }
        match self.vault.get(share_id)? {
            Some(existing) if existing.same_payload(&entry) => Ok(()),
            Some(_) => Err(ProxyError::Conflict(share_id.to_owned())),
            // Deleted between the insert and the read; try once more.
            None if self.vault.insert(share_id, &entry)? => Ok(()),
            None => Err(ProxyError::Conflict(share_id.to_owned())),
        }
    }

    /// One cfrag per stored kfrag.
    pub fn reencapsulate_for_share(&self, share_id: &str, capsule: &Capsule) -> Result<Vec<CapsuleFragment>> {
        if !capsule.verify() {
            return Err(ProxyError::Validation("capsule fails its self-check".into()));
        }
        let entry = self.vault.get(share_id)?.ok_or_else(|| ProxyError::NotFound(share_id.to_owned()))?;
        entry
            .kfrags
            .iter()
            .map(|k| {
                let frag = api::decode(k)
                    .and_then(|b| KeyFragment::from_bytes(&b).ok())
                    .ok_or_else(|| ProxyError::Internal(format!("stored kfrag for {share_id} is corrupt")))?;
                reencapsulate(&mut OsRng, &frag, capsule).map_err(|e| ProxyError::Internal(e.to_string()))
            })
            .collect()
    }

    pub fn reencapsulate_encoded(&self, share_id: &str, capsule: &str) -> Result<Vec<String>> {
        let bytes = api::decode(capsule).ok_or_else(|| ProxyError::Validation("capsule is not base64".into()))?;
        let capsule = Capsule::from_bytes(&bytes).map_err(|e| ProxyError::Validation(format!("capsule: {e}")))?;
        Ok(self
            .reencapsulate_for_share(share_id, &capsule)?
            .iter()
            .map(|c| api::encode(&c.to_bytes()))
            .collect())
    }

    /// Idempotent; unknown ids are acknowledged.
    pub fn delete_kfrags(&self, share_id: &str) -> Result<()> {
        self.vault.delete(share_id)?;
        Ok(())
    }

    pub fn entry(&self, share_id: &str) -> Result<Option<VaultEntry>> {
        Ok(self.vault.get(share_id)?)
    }

    pub fn entries(&self) -> Result<Vec<VaultEntry>> {
        Ok(self.vault.query(&medshare_storage::Query::all())?)
    }
}
