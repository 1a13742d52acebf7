use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Pdf,
    Png,
    Jpeg,
}

impl MediaType {
    /// Accepts short names and MIME types.
    pub fn parse(value: &str) -> Option<Self> {
        match value.trim().to_ascii_lowercase().as_str() {
            "pdf" | "application/pdf" => Some(MediaType::Pdf),
            "png" | "image/png" => Some(MediaType::Png),
            "jpeg" | "jpg" | "image/jpeg" | "image/jpg" => Some(MediaType::Jpeg),
            _ => None,
        }
    }

    pub fn from_filename(name: &str) -> Option<Self> {
        Self::parse(name.rsplit_once('.')?.1)
    }

    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Pdf => "application/pdf",
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }
}

/// Stored record metadata. The sealed body lives in the blob store under
/// the same id. Never modified after creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhrRecord {
    pub resource_id: String,
    pub owner_id: String,
    pub filename: String,
    pub media_type: MediaType,
    pub size_bytes: u64,
    pub created_at: DateTime<Utc>,
    /// Base64 of the 98-byte capsule.
    pub capsule: String,
    /// Base64 of the 12-byte AEAD nonce.
    pub nonce: String,
}

/// Metadata view for listings; carries no key or ciphertext material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhrSummary {
    pub resource_id: String,
    pub owner_id: String,
    pub filename: String,
    pub media_type: MediaType,
    pub size_bytes: u64,
    pub created_at: DateTime<Utc>,
}

impl From<&EhrRecord> for EhrSummary {
    fn from(r: &EhrRecord) -> Self {
        Self {
            resource_id: r.resource_id.clone(),
            owner_id: r.owner_id.clone(),
            filename: r.filename.clone(),
            media_type: r.media_type,
            size_bytes: r.size_bytes,
            created_at: r.created_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShareStatus {
    Pending,
    Accepted,
    Declined,
    Revoked,
    Expired,
}

impl ShareStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ShareStatus::Pending => "pending",
            ShareStatus::Accepted => "accepted",
            ShareStatus::Declined => "declined",
            ShareStatus::Revoked => "revoked",
            ShareStatus::Expired => "expired",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, ShareStatus::Declined | ShareStatus::Revoked | ShareStatus::Expired)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRequest {
    pub share_id: String,
    pub resource_id: String,
    pub delegator_id: String,
    pub delegatee_id: String,
    pub status: ShareStatus,
    /// Unix milliseconds; absent means indefinite.
    pub expiry: Option<i64>,
    #[serde(default)]
    pub break_glass: bool,
    #[serde(default)]
    pub threshold: Option<u16>,
    #[serde(default)]
    pub shares: Option<u16>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl ShareRequest {
    pub fn expires_at(&self) -> Option<DateTime<Utc>> {
        self.expiry.and_then(|ms| Utc.timestamp_millis_opt(ms).single())
    }

    /// Accepted and not past its expiry. A share is still valid at exactly
    /// its expiry instant.
    pub fn grants_access_at(&self, now: DateTime<Utc>) -> bool {
        self.status == ShareStatus::Accepted && self.expiry.map_or(true, |e| now.timestamp_millis() <= e)
    }
}

/// Listing view with the names a client needs to render a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareView {
    #[serde(flatten)]
    pub share: ShareRequest,
    pub filename: Option<String>,
    pub delegator_name: Option<String>,
    pub delegatee_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedEhr {
    #[serde(flatten)]
    pub record: EhrSummary,
    pub share_id: String,
    pub expiry: Option<i64>,
    pub break_glass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhrListing {
    pub owned: Vec<EhrSummary>,
    pub shared: Vec<SharedEhr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Requests addressed to the caller as record owner.
    Incoming,
    /// Requests the caller made as delegatee.
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Decline,
}

/// Decrypted payload plus metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retrieved {
    pub record: EhrSummary,
    pub bytes: Vec<u8>,
    /// Whether the proxy was involved.
    pub via_proxy: bool,
}
