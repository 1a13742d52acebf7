use std::sync::Arc;
use std::time::Duration as StdDuration;

use async_trait::async_trait;
use chrono::Duration;
use medshare_auth::{issue_service_token, TokenCodec};
use medshare_pre::{Capsule, CapsuleFragment, KeyFragment};
use medshare_proxy::api::{self, ErrorBody, ReencapsulateRequest, ReencapsulateResponse, StoreKfragsRequest};
use medshare_proxy::{ProxyError, ProxyService};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProxyCallError {
    #[error("share not found at proxy")]
    NotFound,
    #[error("proxy rejected request: {0}")]
    Rejected(String),
    #[error("proxy unreachable: {0}")]
    Unavailable(String),
}

#[async_trait]
pub trait ProxyClient: Send + Sync {
    async fn store_kfrags(
        &self,
        share_id: &str,
        kfrags: &[KeyFragment],
        threshold: u16,
        shares: u16,
    ) -> Result<(), ProxyCallError>;

    async fn reencapsulate(&self, share_id: &str, capsule: &Capsule) -> Result<Vec<CapsuleFragment>, ProxyCallError>;

    async fn delete_kfrags(&self, share_id: &str) -> Result<(), ProxyCallError>;
}

/// Calls a proxy living in the same process.
pub struct InProcessProxy(pub Arc<ProxyService>);

fn map_local(e: ProxyError) -> ProxyCallError {
    match e {
        ProxyError::NotFound(_) => ProxyCallError::NotFound,
        ProxyError::Validation(m) => ProxyCallError::Rejected(m),
        other @ ProxyError::Conflict(_) => ProxyCallError::Rejected(other.to_string()),
        other => ProxyCallError::Unavailable(other.to_string()),
    }
}

#[async_trait]
impl ProxyClient for InProcessProxy {
    async fn store_kfrags(
        &self,
        share_id: &str,
        kfrags: &[KeyFragment],
        threshold: u16,
        shares: u16,
    ) -> Result<(), ProxyCallError> {
        self.0.store_kfrags(share_id, kfrags, threshold, shares).map_err(map_local)
    }

    async fn reencapsulate(&self, share_id: &str, capsule: &Capsule) -> Result<Vec<CapsuleFragment>, ProxyCallError> {
        self.0.reencapsulate_for_share(share_id, capsule).map_err(map_local)
    }

    async fn delete_kfrags(&self, share_id: &str) -> Result<(), ProxyCallError> {
        self.0.delete_kfrags(share_id).map_err(map_local)
    }
}

/// HTTP client for a remote proxy. Each call carries a freshly minted
/// service token signed with the shared key.
pub struct HttpProxyClient {
    base_url: String,
    http: reqwest::Client,
    tokens: TokenCodec,
}

impl HttpProxyClient {
    pub fn new(base_url: impl Into<String>, tokens: TokenCodec) -> Self {
        let http = reqwest::Client::builder()
            .timeout(StdDuration::from_secs(30))
            .build()
            .expect("reqwest client builds with static config");
        Self { base_url: base_url.into().trim_end_matches('/').to_owned(), http, tokens }
    }

    fn token(&self) -> Result<String, ProxyCallError> {
        issue_service_token(&self.tokens, "resource", Duration::minutes(5))
            .map_err(|e| ProxyCallError::Unavailable(e.to_string()))
    }

    async fn check(resp: reqwest::Response) -> Result<reqwest::Response, ProxyCallError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let message = match resp.json::<ErrorBody>().await {
            Ok(b) => b.message,
            Err(_) => status.to_string(),
        };
        Err(match status.as_u16() {
            404 => ProxyCallError::NotFound,
            400 | 409 => ProxyCallError::Rejected(message),
            _ => ProxyCallError::Unavailable(message),
        })
    }
}

fn transport(e: reqwest::Error) -> ProxyCallError {
    ProxyCallError::Unavailable(e.to_string())
}

#[async_trait]
impl ProxyClient for HttpProxyClient {
    async fn store_kfrags(
        &self,
        share_id: &str,
        kfrags: &[KeyFragment],
        threshold: u16,
        shares: u16,
    ) -> Result<(), ProxyCallError> {
        let body = StoreKfragsRequest {
            share_id: share_id.to_owned(),
            kfrags: kfrags.iter().map(|k| api::encode(&k.to_bytes())).collect(),
            threshold,
            shares,
        };
        let resp = self
            .http
            .post(format!("{}/kfrags", self.base_url))
            .bearer_auth(self.token()?)
            .json(&body)
            .send()
            .await
            .map_err(transport)?;
        Self::check(resp).await.map(|_| ())
    }

    async fn reencapsulate(&self, share_id: &str, capsule: &Capsule) -> Result<Vec<CapsuleFragment>, ProxyCallError> {
        let body = ReencapsulateRequest { share_id: share_id.to_owned(), capsule: api::encode(&capsule.to_bytes()) };
        let resp = self
            .http
            .post(format!("{}/reencapsulate", self.base_url))
            .bearer_auth(self.token()?)
            .json(&body)
            .send()
            .await
            .map_err(transport)?;
        let parsed: ReencapsulateResponse = Self::check(resp).await?.json().await.map_err(transport)?;
        parsed
            .cfrags
            .iter()
            .map(|c| {
                api::decode(c)
                    .and_then(|b| CapsuleFragment::from_bytes(&b).ok())
                    .ok_or_else(|| ProxyCallError::Rejected("proxy returned an undecodable cfrag".into()))
            })
            .collect()
    }

    async fn delete_kfrags(&self, share_id: &str) -> Result<(), ProxyCallError> {
        let resp = self
            .http
            .delete(format!("{}/kfrags/{}", self.base_url, share_id))
            .bearer_auth(self.token()?)
            .send()
            .await
            .map_err(transport)?;
        Self::check(resp).await.map(|_| ())
    }
}
