//! Persistence for the platform services: a document store for users,
//! records and share requests, an expiring key-value store for refresh
//! token families, and a blob store for encrypted record bodies. Each has
//! an in-memory backend and a file backend that survives restarts.

mod blob;
mod clock;
mod document;
mod error;
mod journal;
mod ttl;
mod typed;

use std::path::PathBuf;
use std::sync::Arc;

pub use blob::{BlobStore, FileBlobStore, MemoryBlobStore};
pub use clock::{Clock, ManualClock, SharedClock, SystemClock};
pub use document::{
    Condition, Document, DocumentStore, FileDocumentStore, MemoryDocumentStore, Query,
    DEFAULT_INDEXED_FIELDS,
};
pub use error::{Result, StorageError};
pub use ttl::{FileTtlStore, MemoryTtlStore, TtlStore};
pub use typed::Collection;

/// Backend selection, usually from service configuration. For the file
/// variant the path is a journal file, or a directory for blobs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Memory,
    File(PathBuf),
}

impl Backend {
    pub fn documents(&self) -> Result<Arc<dyn DocumentStore>> {
        Ok(match self {
            Backend::Memory => Arc::new(MemoryDocumentStore::new()),
            Backend::File(path) => Arc::new(FileDocumentStore::open(path)?),
        })
    }

    pub fn ttl(&self, clock: SharedClock) -> Result<Arc<dyn TtlStore>> {
        Ok(match self {
            Backend::Memory => Arc::new(MemoryTtlStore::new(clock)),
            Backend::File(path) => Arc::new(FileTtlStore::open(path, clock)?),
        })
    }

    pub fn blobs(&self) -> Result<Arc<dyn BlobStore>> {
        Ok(match self {
            Backend::Memory => Arc::new(MemoryBlobStore::new()),
            Backend::File(dir) => Arc::new(FileBlobStore::open(dir)?),
        })
    }
}
