use std::sync::Arc;

use axum::extract::{Path, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, post};
use axum::{Json, Router};
use medshare_auth::http::bearer_token;
use medshare_auth::{Role, TokenCodec};

use crate::api::{Ack, ErrorBody, ReencapsulateRequest, ReencapsulateResponse, StoreKfragsRequest};
use crate::error::{ProxyError, Result};
use crate::vault::ProxyService;

impl IntoResponse for ProxyError {
    fn into_response(self) -> Response {
        let status = match &self {
            ProxyError::Validation(_) => StatusCode::BAD_REQUEST,
            ProxyError::Conflict(_) => StatusCode::CONFLICT,
            ProxyError::NotFound(_) => StatusCode::NOT_FOUND,
            ProxyError::Unauthorized => StatusCode::UNAUTHORIZED,
            ProxyError::Storage(_) | ProxyError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "proxy request failed");
        }
        (status, Json(ErrorBody { error: self.code().into(), message: self.to_string() })).into_response()
    }
}

/// All routes require a bearer token carrying the `service` role.
pub fn router(service: Arc<ProxyService>, tokens: TokenCodec) -> Router {
    let tokens = Arc::new(tokens);
    Router::new()
        .route("/kfrags", post(store))
        .route("/kfrags/:share_id", delete(remove))
        .route("/reencapsulate", post(reencapsulate))
        .layer(middleware::from_fn_with_state(tokens, require_service))
        .with_state(service)
}

async fn require_service(State(tokens): State<Arc<TokenCodec>>, req: Request, next: Next) -> Response {
    let allowed = bearer_token(req.headers())
        .and_then(|t| tokens.verify_access(t).ok())
        .is_some_and(|c| c.has_role(Role::Service));
    if !allowed {
        return ProxyError::Unauthorized.into_response();
    }
    next.run(req).await
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ProxyError::Validation(e.to_string()))
}

async fn store(State(svc): State<Arc<ProxyService>>, body: axum::body::Bytes) -> Result<Json<Ack>> {
    let req: StoreKfragsRequest = parse(&body)?;
    tokio::task::spawn_blocking(move || svc.store_encoded(&req.share_id, req.kfrags, req.threshold, req.shares))
        .await
        .map_err(|e| ProxyError::Internal(e.to_string()))??;
    Ok(Json(Ack { ok: true }))
}

async fn reencapsulate(
    State(svc): State<Arc<ProxyService>>,
    body: axum::body::Bytes,
) -> Result<Json<ReencapsulateResponse>> {
    let req: ReencapsulateRequest = parse(&body)?;
    let cfrags = tokio::task::spawn_blocking(move || svc.reencapsulate_encoded(&req.share_id, &req.capsule))
        .await
        .map_err(|e| ProxyError::Internal(e.to_string()))??;
    Ok(Json(ReencapsulateResponse { cfrags }))
}

async fn remove(State(svc): State<Arc<ProxyService>>, Path(share_id): Path<String>) -> Result<Json<Ack>> {
    svc.delete_kfrags(&share_id)?;
    Ok(Json(Ack { ok: true }))
}
