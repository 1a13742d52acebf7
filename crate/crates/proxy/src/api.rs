//! Wire types shared by the proxy server and its clients. Binary values are
//! standard base64 strings.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreKfragsRequest {
    pub share_id: String,
    pub kfrags: Vec<String>,
    pub threshold: u16,
    pub shares: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReencapsulateRequest {
    pub share_id: String,
    pub capsule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReencapsulateResponse {
    pub cfrags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub fn encode(bytes: &[u8]) -> String {
    B64.encode(bytes)
}

pub fn decode(value: &str) -> Option<Vec<u8>> {
    B64.decode(value).ok()
}
