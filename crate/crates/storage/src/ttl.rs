use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::clock::SharedClock;
use crate::error::Result;
use crate::journal::Journal;

/// Expiring byte values. Entries are unreadable from their expiry instant on.
pub trait TtlStore: Send + Sync {
    fn set(&self, key: &str, value: Vec<u8>, ttl: Duration) -> Result<()>;

    fn get(&self, key: &str) -> Result<Option<Vec<u8>>>;

    /// Replaces the value iff the live value equals `expected`. The expiry
    /// is kept unless `ttl` is given.
    fn compare_and_swap(
        &self,
        key: &str,
        expected: &[u8],
        new: Vec<u8>,
        ttl: Option<Duration>,
    ) -> Result<bool>;

    fn delete(&self, key: &str) -> Result<()>;

    /// Drops expired entries; returns how many were removed.
    fn purge_expired(&self) -> Result<usize>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    value: Vec<u8>,
    expires_at: DateTime<Utc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum TtlOp {
    Set { key: String, value: Vec<u8>, expires_at: DateTime<Utc> },
    Delete { key: String },
}

#[derive(Default)]
struct Entries(HashMap<String, Entry>);

impl Entries {
    fn live(&self, key: &str, now: DateTime<Utc>) -> Option<&Entry> {
        self.0.get(key).filter(|e| e.expires_at > now)
    }

    fn apply(&mut self, op: TtlOp) {
        match op {
            TtlOp::Set { key, value, expires_at } => {
                self.0.insert(key, Entry { value, expires_at });
            }
            TtlOp::Delete { key } => {
                self.0.remove(&key);
            }
        }
    }

    fn expired_keys(&self, now: DateTime<Utc>) -> Vec<String> {
        self.0.iter().filter(|(_, e)| e.expires_at <= now).map(|(k, _)| k.clone()).collect()
    }

    /// Builds the op for a successful CAS, or `None` if it does not apply.
    fn cas_op(
        &self,
        key: &str,
        expected: &[u8],
        new: Vec<u8>,
        ttl: Option<Duration>,
        now: DateTime<Utc>,
    ) -> Option<TtlOp> {
        let current = self.live(key, now)?;
        if current.value != expected {
            return None;
        }
        let expires_at = ttl.map(|t| now + t).unwrap_or(current.expires_at);
        Some(TtlOp::Set { key: key.to_owned(), value: new, expires_at })
    }
}

pub struct MemoryTtlStore {
    clock: SharedClock,
    entries: Mutex<Entries>,
}

impl MemoryTtlStore {
    pub fn new(clock: SharedClock) -> Self {
        Self { clock, entries: Mutex::new(Entries::default()) }
    }
}

impl TtlStore for MemoryTtlStore {
    fn set(&self, key: &str, value: Vec<u8>, ttl: Duration) -> Result<()> {
        let expires_at = self.clock.now() + ttl;
        self.entries.lock().apply(TtlOp::Set { key: key.to_owned(), value, expires_at });
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Option<Vec<u8>>> {
        let now = self.clock.now();
        Ok(self.entries.lock().live(key, now).map(|e| e.value.clone()))
    }

    fn compare_and_swap(
        &self,
        key: &str,
        expected: &[u8],
        new: Vec<u8>,
        ttl: Option<Duration>,
    ) -> Result<bool> {
        let now = self.clock.now();
        let mut entries = self.entries.lock();
        match entries.cas_op(key, expected, new, ttl, now) {
            Some(op) => {
                entries.apply(op);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn delete(&self, key: &str) -> Result<()> {
        self.entries.lock().apply(TtlOp::Delete { key: key.to_owned() });
        Ok(())
    }

    fn purge_expired(&self) -> Result<usize> {
        let now = self.clock.now();
        let mut entries = self.entries.lock();
        let keys = entries.expired_keys(now);
        for key in &keys {
            entries.apply(TtlOp::Delete { key: key.clone() });
        }
        Ok(keys.len())
    }
}

pub struct FileTtlStore {
    clock: SharedClock,
    state: Mutex<(Entries, Journal<TtlOp>)>,
}

impl FileTtlStore {
    pub fn open(path: impl AsRef<Path>, clock: SharedClock) -> Result<Self> {
        let mut entries = Entries::default();
        let mut journal = Journal::open(path.as_ref(), false, |op| entries.apply(op))?;
        let now = clock.now();
        for key in entries.expired_keys(now) {
            entries.0.remove(&key);
        }
        let snapshot: Vec<TtlOp> = entries
            .0
            .iter()
            .map(|(k, e)| TtlOp::Set { key: k.clone(), value: e.value.clone(), expires_at: e.expires_at })
            .collect();
        journal.rewrite(snapshot.iter())?;
        Ok(Self { clock, state: Mutex::new((entries, journal)) })
    }
}

impl TtlStore for FileTtlStore {
    fn set(&self, key: &str, value: Vec<u8>, ttl: Duration) -> Result<()> {
        let op = TtlOp::Set { key: key.to_owned(), value, expires_at: self.clock.now() + ttl };
        let mut guard = self.state.lock();
        guard.1.append(&op)?;
        guard.0.apply(op);
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Option<Vec<u8>>> {
        let now = self.clock.now();
        Ok(self.state.lock().0.live(key, now).map(|e| e.value.clone()))
    }

    fn compare_and_swap(
        &self,
        key: &str,
        expected: &[u8],
        new: Vec<u8>,
        ttl: Option<Duration>,
    ) -> Result<bool> {
        let now = self.clock.now();
        let mut guard = self.state.lock();
        let (entries, journal) = &mut *guard;
        match entries.cas_op(key, expected, new, ttl, now) {
            Some(op) => {
                journal.append(&op)?;
                entries.apply(op);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn delete(&self, key: &str) -> Result<()> {
        let op = TtlOp::Delete { key: key.to_owned() };
        let mut guard = self.state.lock();
        guard.1.append(&op)?;
        guard.0.apply(op);
        Ok(())
    }

    fn purge_expired(&self) -> Result<usize> {
        let now = self.clock.now();
        let mut guard = self.state.lock();
        let (entries, journal) = &mut *guard;
        let keys = entries.expired_keys(now);
        for key in &keys {
            let op = TtlOp::Delete { key: key.clone() };
            journal.append(&op)?;
            entries.apply(op);
        }
        Ok(keys.len())
    }
}
