//! Re-encryption proxy. Keeps kfrags per share and turns capsules into
//! cfrags on request. Deleting a share's kfrags is the whole of revocation:
//! without them nothing can be re-encapsulated for that share.

pub mod api;
pub mod error;
pub mod http;
pub mod vault;

pub use error::{ProxyError, Result};
pub use vault::{ProxyService, VaultEntry, VAULT};
