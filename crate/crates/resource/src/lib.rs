//! Resource server. Encrypts uploaded records under the owner's key, runs
//! the share-request consent state machine, provisions break-glass access
//! for the trusted entity, and decrypts on retrieval either directly
//! (owner) or through the proxy's capsule fragments (delegatee).
//!
//! Secret keys arrive per request and are never written anywhere.

pub mod error;
pub mod http;
pub mod model;
pub mod proxy_client;
pub mod service;

pub use error::{ResourceError, Result};
pub use model::{
    Decision, Direction, EhrListing, EhrRecord, EhrSummary, MediaType, Retrieved, ShareRequest, ShareStatus,
    ShareView, SharedEhr,
};
pub use proxy_client::{HttpProxyClient, InProcessProxy, ProxyCallError, ProxyClient};
pub use service::{spawn_sweeper, AcceptTerms, Caller, OwnerKeys, ResourceConfig, ResourceService, MAX_SHARES};
