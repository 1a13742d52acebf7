use std::marker::PhantomData;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::document::{Document, DocumentStore, Query};
use crate::error::{Result, StorageError};

/// Typed view over one collection of a [`DocumentStore`].
pub struct Collection<T> {
    store: Arc<dyn DocumentStore>,
    name: &'static str,
    _record: PhantomData<fn() -> T>,
}

impl<T> Clone for Collection<T> {
    fn clone(&self) -> Self {
        Self { store: self.store.clone(), name: self.name, _record: PhantomData }
    }
}

impl<T: Serialize + DeserializeOwned> Collection<T> {
    pub fn new(store: Arc<dyn DocumentStore>, name: &'static str) -> Self {
        Self { store, name, _record: PhantomData }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn store(&self) -> &Arc<dyn DocumentStore> {
        &self.store
    }

    pub fn put(&self, id: &str, record: &T) -> Result<()> {
        self.store.put(self.name, id, serde_json::to_value(record)?)
    }

    pub fn insert(&self, id: &str, record: &T) -> Result<bool> {
        self.store.insert(self.name, id, serde_json::to_value(record)?)
    }

    pub fn get(&self, id: &str) -> Result<Option<T>> {
        self.store.get(self.name, id)?.map(decode).transpose()
    }

    pub fn query(&self, query: &Query) -> Result<Vec<T>> {
        self.store.query(self.name, query)?.into_iter().map(decode).collect()
    }

    pub fn delete(&self, id: &str) -> Result<bool> {
        self.store.delete(self.name, id)
    }

    /// CAS on `field`, merging the serialized fields of `patch` on success.
    pub fn compare_and_update<P: Serialize>(
        &self,
        id: &str,
        field: &str,
        expected: &Value,
        patch: &P,
    ) -> Result<bool> {
        let patch = match serde_json::to_value(patch)? {
            Value::Object(map) => map,
            _ => return Err(StorageError::NotAnObject),
        };
        self.store.compare_and_update(self.name, id, field, expected, patch)
    }

    pub fn compare_and_swap(&self, id: &str, field: &str, expected: &Value, new: Value) -> Result<bool> {
        let mut patch = Document::new();
        patch.insert(field.to_owned(), new);
        self.store.compare_and_update(self.name, id, field, expected, patch)
    }
}

fn decode<T: DeserializeOwned>(v: Value) -> Result<T> {
    Ok(serde_json::from_value(v)?)
}
