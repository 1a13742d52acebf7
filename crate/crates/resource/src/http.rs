use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequestParts, Multipart, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{async_trait, Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use medshare_auth::http::bearer_token;
use medshare_auth::TokenCodec;
use medshare_pre::{SecretKey, SigningKey};
use serde::{Deserialize, Serialize};

use crate::error::{ResourceError, Result};
use crate::model::{Decision, Direction, EhrListing, EhrSummary, ShareRequest, ShareView};
use crate::service::{AcceptTerms, Caller, OwnerKeys, ResourceService};

pub const SECRET_KEY_HEADER: &str = "x-secret-key";
pub const SIGNING_KEY_HEADER: &str = "x-signing-key";

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ResourceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ResourceError::Validation(_) => StatusCode::BAD_REQUEST,
            ResourceError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ResourceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ResourceError::NotFound(_) => StatusCode::NOT_FOUND,
            ResourceError::BusinessRule(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ResourceError::Conflict(_) | ResourceError::State { .. } => StatusCode::CONFLICT,
            ResourceError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ResourceError::Proxy(_) | ResourceError::Integrity(_) | ResourceError::Threshold { .. } => {
                StatusCode::BAD_GATEWAY
            }
            ResourceError::Configuration(_) => StatusCode::SERVICE_UNAVAILABLE,
            ResourceError::Storage(_) | ResourceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "resource request failed");
        }
        (status, Json(ErrorBody { error: self.code().into(), message: self.to_string() })).into_response()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<ResourceService>,
    pub tokens: Arc<TokenCodec>,
}

/// Extractor for the bearer-authenticated caller.
pub struct Authenticated(pub Caller);

#[async_trait]
impl FromRequestParts<AppState> for Authenticated {
    type Rejection = ResourceError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self> {
        let token =
            bearer_token(&parts.headers).ok_or_else(|| ResourceError::Unauthorized("bearer token required".into()))?;
        let claims = state.tokens.verify_access(token).map_err(|e| ResourceError::Unauthorized(e.code().into()))?;
        Ok(Authenticated(Caller::from_claims(&claims)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShareCreate {
    pub resource_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerBody {
    pub decision: Decision,
    #[serde(default)]
    pub expiry: Option<DateTime<Utc>>,
    #[serde(default)]
    pub threshold: Option<u16>,
    #[serde(default)]
    pub shares: Option<u16>,
}

#[derive(Debug, Deserialize)]
struct DirectionQuery {
    direction: Direction,
}

pub fn router(service: Arc<ResourceService>, tokens: TokenCodec) -> Router {
    let limit = service.config().max_upload_bytes + 1024 * 1024;
    let state = AppState { service, tokens: Arc::new(tokens) };
    Router::new()
        .route("/ehr", post(upload).get(list_ehrs).layer(DefaultBodyLimit::max(limit)))
        .route("/ehr/:id", get(retrieve))
        .route("/shares", post(request_share).get(list_shares))
        .route("/shares/:id/answer", post(answer))
        .route("/shares/:id/revoke", post(revoke))
        .with_state(state)
}

fn header_bytes(headers: &HeaderMap, name: &str) -> Result<Vec<u8>> {
    let value = headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| ResourceError::Validation(format!("header {name} is required")))?;
    B64.decode(value.trim()).map_err(|_| ResourceError::Validation(format!("header {name} is not base64")))
}

fn secret_key(headers: &HeaderMap) -> Result<SecretKey> {
    SecretKey::from_bytes(&header_bytes(headers, SECRET_KEY_HEADER)?)
        .map_err(|e| ResourceError::Validation(format!("secret key: {e}")))
}

fn owner_keys(headers: &HeaderMap) -> Result<OwnerKeys> {
    let signing = SigningKey::from_bytes(&header_bytes(headers, SIGNING_KEY_HEADER)?)
        .map_err(|e| ResourceError::Validation(format!("signing key: {e}")))?;
    Ok(OwnerKeys { secret: secret_key(headers)?, signing })
}

fn bad_multipart(e: impl std::fmt::Display) -> ResourceError {
    ResourceError::Validation(format!("multipart: {e}"))
}

async fn upload(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    headers: HeaderMap,
    mut form: Multipart,
) -> Result<Response> {
    let keys = owner_keys(&headers)?;
    let mut file: Option<(String, Option<String>, Vec<u8>)> = None;
    let mut media_type: Option<String> = None;
    while let Some(field) = form.next_field().await.map_err(bad_multipart)? {
        match field.name() {
            Some("file") => {
                let name = field.file_name().unwrap_or_default().to_owned();
                let content_type = field.content_type().map(str::to_owned);
                let bytes = field.bytes().await.map_err(bad_multipart)?;
                file = Some((name, content_type, bytes.to_vec()));
            }
            Some("media_type") => media_type = Some(field.text().await.map_err(bad_multipart)?),
            _ => {}
        }
    }
    let (filename, content_type, bytes) =
        file.ok_or_else(|| ResourceError::Validation("multipart field `file` is required".into()))?;
    // An explicit field wins; a generic part content type falls back to the
    // file extension.
    let media = media_type.or(content_type.filter(|c| c != "application/octet-stream"));
    let record = state.service.upload_ehr(&caller, &keys, &filename, media.as_deref(), bytes).await?;
    Ok((StatusCode::CREATED, Json(EhrSummary::from(&record))).into_response())
}

async fn list_ehrs(State(state): State<AppState>, Authenticated(caller): Authenticated) -> Result<Json<EhrListing>> {
    Ok(Json(state.service.list_ehrs(&caller)?))
}

async fn retrieve(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response> {
    let secret = secret_key(&headers)?;
    let got = state.service.retrieve_ehr(&caller, &id, &secret).await?;
    let safe_name: String =
        got.record.filename.chars().map(|c| if c.is_ascii_graphic() && c != '"' && c != '\\' { c } else { '_' }).collect();
    let mut resp = got.bytes.into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static(got.record.media_type.mime()));
    if let Ok(v) = HeaderValue::from_str(&format!("attachment; filename=\"{safe_name}\"")) {
        h.insert(header::CONTENT_DISPOSITION, v);
    }
    if let Ok(v) = HeaderValue::from_str(&got.record.resource_id) {
        h.insert("x-resource-id", v);
    }
    h.insert("x-via-proxy", HeaderValue::from_static(if got.via_proxy { "true" } else { "false" }));
    Ok(resp)
}

async fn request_share(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    body: axum::body::Bytes,
) -> Result<Response> {
    let req: ShareCreate = serde_json::from_slice(&body).map_err(|e| ResourceError::Validation(e.to_string()))?;
    let share = state.service.request_share(&caller, &req.resource_id).await?;
    Ok((StatusCode::CREATED, Json(share)).into_response())
}

async fn answer(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Json<ShareRequest>> {
    let req: AnswerBody = serde_json::from_slice(&body).map_err(|e| ResourceError::Validation(e.to_string()))?;
    let keys = match req.decision {
        Decision::Accept => Some(owner_keys(&headers)?),
        Decision::Decline => None,
    };
    let terms = AcceptTerms { expiry: req.expiry, threshold: req.threshold, shares: req.shares };
    Ok(Json(state.service.answer_share(&caller, &id, req.decision, keys.as_ref(), terms).await?))
}

async fn revoke(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    Path(id): Path<String>,
) -> Result<Json<ShareRequest>> {
    Ok(Json(state.service.revoke_share(&caller, &id).await?))
}

async fn list_shares(
    State(state): State<AppState>,
    Authenticated(caller): Authenticated,
    query: std::result::Result<Query<DirectionQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Vec<ShareView>>> {
    let Query(q) = query.map_err(|e| ResourceError::Validation(e.to_string()))?;
    Ok(Json(state.service.list_share_requests(&caller, q.direction)?))
}
