use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{AuthError, Result};
use crate::model::{Registration, TokenPair, UserProfile};
use crate::service::AuthService;
use crate::tokens::Claims;

pub const REFRESH_COOKIE: &str = "refresh_token";
pub const CSRF_HEADER: &str = "x-csrf-token";

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for AuthError {
    fn into_response(self) -> Response {
        let status = match &self {
            AuthError::Validation(_) => StatusCode::BAD_REQUEST,
            AuthError::Conflict(_) => StatusCode::CONFLICT,
            AuthError::InvalidCredentials
            | AuthError::TokenMalformed
            | AuthError::TokenSignature
            | AuthError::TokenExpired
            | AuthError::WrongTokenType
            | AuthError::FamilyRevoked
            | AuthError::SessionNotFound => StatusCode::UNAUTHORIZED,
            AuthError::Csrf | AuthError::Forbidden => StatusCode::FORBIDDEN,
            AuthError::Storage(_) | AuthError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "auth request failed");
        }
        let body = ErrorBody { error: self.code().to_owned(), message: self.to_string() };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LoginRequest {
    pub email: String,
    pub password: String,
}

/// Body of login and refresh responses. The refresh token itself travels
/// only in the cookie.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionResponse {
    pub access_token: String,
    pub token_type: String,
    pub csrf_token: String,
    pub expires_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<UserProfile>,
}

pub fn router(service: Arc<AuthService>) -> Router {
    Router::new()
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/auth/refresh", post(refresh))
        .route("/auth/logout", post(logout))
        .route("/auth/verify", get(verify))
        .with_state(service)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| AuthError::Internal(e.to_string()))?
}

async fn register(State(svc): State<Arc<AuthService>>, body: Bytes) -> Result<Response> {
    let reg: Registration =
        serde_json::from_slice(&body).map_err(|e| AuthError::Validation(e.to_string()))?;
    let account = blocking(move || svc.register(reg)).await?;
    Ok((StatusCode::CREATED, Json(account.profile())).into_response())
}

async fn login(State(svc): State<Arc<AuthService>>, body: Bytes) -> Result<Response> {
    let req: LoginRequest =
        serde_json::from_slice(&body).map_err(|e| AuthError::Validation(e.to_string()))?;
    let ttl = svc.config().refresh_ttl.num_seconds();
    let (account, pair) = blocking(move || svc.login(&req.email, &req.password)).await?;
    Ok(session_response(pair, Some(account.profile()), ttl))
}

async fn refresh(State(svc): State<Arc<AuthService>>, headers: HeaderMap) -> Result<Response> {
    let token = refresh_cookie(&headers).ok_or(AuthError::TokenMalformed)?;
    svc.check_csrf(&token, csrf_header(&headers))?;
    let pair = svc.refresh(&token)?;
    Ok(session_response(pair, None, svc.config().refresh_ttl.num_seconds()))
}

async fn logout(State(svc): State<Arc<AuthService>>, headers: HeaderMap) -> Result<Response> {
    let token = refresh_cookie(&headers).ok_or(AuthError::TokenMalformed)?;
    svc.check_csrf(&token, csrf_header(&headers))?;
    svc.logout(&token)?;
    let mut resp = StatusCode::NO_CONTENT.into_response();
    resp.headers_mut().insert(header::SET_COOKIE, cookie_value("", 0));
    Ok(resp)
}

async fn verify(State(svc): State<Arc<AuthService>>, headers: HeaderMap) -> Result<Json<Claims>> {
    let token = bearer_token(&headers).ok_or(AuthError::TokenMalformed)?;
    Ok(Json(svc.verify_access_token(token)?))
}

fn session_response(pair: TokenPair, user: Option<UserProfile>, max_age: i64) -> Response {
    let body = SessionResponse {
        access_token: pair.access_token,
        token_type: "Bearer".into(),
        csrf_token: pair.csrf_token,
        expires_at: pair.access_expires_at,
        user,
    };
    let mut resp = Json(body).into_response();
    resp.headers_mut().insert(header::SET_COOKIE, cookie_value(&pair.refresh_token, max_age));
    resp
}

fn cookie_value(token: &str, max_age: i64) -> HeaderValue {
    let v = format!("{REFRESH_COOKIE}={token}; Max-Age={max_age}; Path=/auth; HttpOnly; Secure; SameSite=Strict");
    HeaderValue::from_str(&v).expect("token is header-safe")
}

pub fn bearer_token(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

fn csrf_header(headers: &HeaderMap) -> Option<&str> {
    headers.get(CSRF_HEADER)?.to_str().ok()
}

pub fn refresh_cookie(headers: &HeaderMap) -> Option<String> {
    headers
        .get_all(header::COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .filter_map(|kv| kv.trim().split_once('='))
        .find(|(k, _)| *k == REFRESH_COOKIE)
        .map(|(_, v)| v.to_owned())
}
