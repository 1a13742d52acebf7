use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use medshare_auth::http::SessionResponse;
use medshare_auth::{Role, UserProfile};
use medshare_pre::{generate_keypair, generate_signing_keypair, KeyPair, SecretKey, SigningKey, SigningKeyPair};
use medshare_resource::{EhrSummary, ShareRequest};
use rand_core::OsRng;
use reqwest::{multipart, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{method} {path}: {status} {code}: {message}")]
    Api { method: &'static str, path: String, status: StatusCode, code: String, message: String },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("key material: {0}")]
    Keys(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// A signed-in user together with the key material that never leaves the
/// client except per request.
pub struct Account {
    pub profile: UserProfile,
    pub password: String,
    pub keys: KeyPair,
    pub signer: SigningKeyPair,
    pub access_token: String,
}

impl Account {
    pub fn user_id(&self) -> &str {
        &self.profile.user_id
    }

    fn secret_header(&self) -> String {
        B64.encode(self.keys.secret().to_bytes())
    }

    fn signing_header(&self) -> String {
        B64.encode(self.signer.signing().to_bytes())
    }
}

/// Downloaded record body plus whether the server went through the proxy.
pub struct Download {
    pub bytes: Vec<u8>,
    pub via_proxy: bool,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
    message: String,
}

#[derive(Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: &str) -> Result<Self> {
        let http = reqwest::Client::builder()
            .pool_idle_timeout(Duration::from_secs(90))
            .timeout(Duration::from_secs(120))
            .build()?;
        Ok(Self { base: base_url.trim_end_matches('/').to_owned(), http })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(method: &'static str, path: &str, req: RequestBuilder) -> Result<Response> {
        let resp = req.send().await?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let text = resp.text().await.unwrap_or_default();
        let (code, message) = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => (b.error, b.message),
            Err(_) => (String::new(), text),
        };
        Err(ClientError::Api { method, path: path.to_owned(), status, code, message })
    }

    async fn json<T: DeserializeOwned>(method: &'static str, path: &str, req: RequestBuilder) -> Result<T> {
        Ok(Self::send(method, path, req).await?.json().await?)
    }

    /// Generates fresh key pairs locally, registers the public halves and
    /// signs in.
    pub async fn register(&self, name: &str, email: &str, password: &str, roles: &[Role]) -> Result<Account> {
        let keys = generate_keypair(&mut OsRng).map_err(|e| ClientError::Keys(e.to_string()))?;
        let signer = generate_signing_keypair(&mut OsRng).map_err(|e| ClientError::Keys(e.to_string()))?;
        let body = json!({
            "name": name,
            "email": email,
            "password": password,
            "public_key": B64.encode(keys.public().to_bytes()),
            "verifying_key": B64.encode(signer.verifying().to_bytes()),
            "roles": roles,
        });
        let _: UserProfile = Self::json("POST", "/auth/register", self.http.post(self.url("/auth/register")).json(&body)).await?;
        self.login(email, password, keys, signer).await
    }

    pub async fn login(&self, email: &str, password: &str, keys: KeyPair, signer: SigningKeyPair) -> Result<Account> {
        let req = self.http.post(self.url("/auth/login")).json(&json!({"email": email, "password": password}));
        let session: SessionResponse = Self::json("POST", "/auth/login", req).await?;
        let profile = session.user.ok_or_else(|| ClientError::Keys("login returned no profile".into()))?;
        if profile.public_key != B64.encode(keys.public().to_bytes()) {
            return Err(ClientError::Keys(format!("secret key does not match the key registered for {email}")));
        }
        Ok(Account { profile, password: password.to_owned(), keys, signer, access_token: session.access_token })
    }

    /// Signs in with base64 keys supplied out of band.
    pub async fn login_with_encoded_keys(&self, email: &str, password: &str, secret: &str, signing: &str) -> Result<Account> {
        let decode = |s: &str| B64.decode(s.trim()).map_err(|e| ClientError::Keys(e.to_string()));
        let secret = SecretKey::from_bytes(&decode(secret)?).map_err(|e| ClientError::Keys(e.to_string()))?;
        let signing = SigningKey::from_bytes(&decode(signing)?).map_err(|e| ClientError::Keys(e.to_string()))?;
        self.login(email, password, KeyPair::from_secret(secret), SigningKeyPair::from_signing_key(signing)).await
    }

    pub async fn upload(&self, owner: &Account, filename: &str, bytes: Vec<u8>) -> Result<EhrSummary> {
        let part = multipart::Part::bytes(bytes).file_name(filename.to_owned());
        let req = self
            .http
            .post(self.url("/ehr"))
            .bearer_auth(&owner.access_token)
            .header("x-secret-key", owner.secret_header())
            .header("x-signing-key", owner.signing_header())
            .multipart(multipart::Form::new().part("file", part));
        Self::json("POST", "/ehr", req).await
    }

    pub async fn request_share(&self, requester: &Account, resource_id: &str) -> Result<ShareRequest> {
        let req = self
            .http
            .post(self.url("/shares"))
            .bearer_auth(&requester.access_token)
            .json(&json!({"resource_id": resource_id}));
        Self::json("POST", "/shares", req).await
    }

    pub async fn accept_share(&self, owner: &Account, share_id: &str, expiry: Option<DateTime<Utc>>) -> Result<ShareRequest> {
        self.answer(owner, share_id, json!({"decision": "accept", "expiry": expiry})).await
    }

    pub async fn decline_share(&self, owner: &Account, share_id: &str) -> Result<ShareRequest> {
        self.answer(owner, share_id, json!({"decision": "decline"})).await
    }

    async fn answer(&self, owner: &Account, share_id: &str, body: serde_json::Value) -> Result<ShareRequest> {
        let path = format!("/shares/{share_id}/answer");
        let req = self
            .http
            .post(self.url(&path))
            .bearer_auth(&owner.access_token)
            .header("x-secret-key", owner.secret_header())
            .header("x-signing-key", owner.signing_header())
            .json(&body);
        Self::json("POST", &path, req).await
    }

    pub async fn revoke_share(&self, owner: &Account, share_id: &str) -> Result<ShareRequest> {
        let path = format!("/shares/{share_id}/revoke");
        let req = self.http.post(self.url(&path)).bearer_auth(&owner.access_token);
        Self::json("POST", &path, req).await
    }

    pub async fn retrieve(&self, who: &Account, resource_id: &str) -> Result<Download> {
        let path = format!("/ehr/{resource_id}");
        let req = self.http.get(self.url(&path)).bearer_auth(&who.access_token).header("x-secret-key", who.secret_header());
        let resp = Self::send("GET", &path, req).await?;
        let via_proxy = resp.headers().get("x-via-proxy").is_some_and(|v| v == "true");
        Ok(Download { bytes: Vec::from(resp.bytes().await?), via_proxy })
    }
}
