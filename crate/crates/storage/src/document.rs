use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Bound;
use std::path::Path;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Result, StorageError};
use crate::journal::Journal;

pub type Document = Map<String, Value>;

/// Fields maintained in secondary indexes by default.
pub const DEFAULT_INDEXED_FIELDS: &[&str] =
    &["owner_id", "delegator_id", "delegatee_id", "resource_id", "status", "expiry", "email"];

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Eq(String, Value),
    /// Numeric or string comparison; null and missing values never match.
    Lt(String, Value),
    Gt(String, Value),
}

impl Condition {
    fn field(&self) -> &str {
        match self {
            Condition::Eq(f, _) | Condition::Lt(f, _) | Condition::Gt(f, _) => f,
        }
    }

    fn matches(&self, doc: &Document) -> bool {
        let actual = doc.get(self.field()).unwrap_or(&Value::Null);
        match self {
            Condition::Eq(_, v) => actual == v,
            Condition::Lt(_, v) => compare(actual, v) == Some(Ordering::Less),
            Condition::Gt(_, v) => compare(actual, v) == Some(Ordering::Greater),
        }
    }
}

fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_i64(), y.as_i64()) {
            (Some(x), Some(y)) => Some(x.cmp(&y)),
            _ => x.as_f64()?.partial_cmp(&y.as_f64()?),
        },
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// Conjunction of field conditions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Query {
    pub conditions: Vec<Condition>,
}

impl Query {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn eq(mut self, field: &str, value: impl Into<Value>) -> Self {
        self.conditions.push(Condition::Eq(field.to_owned(), value.into()));
        self
    }

    pub fn lt(mut self, field: &str, value: impl Into<Value>) -> Self {
        self.conditions.push(Condition::Lt(field.to_owned(), value.into()));
        self
    }

    pub fn gt(mut self, field: &str, value: impl Into<Value>) -> Self {
        self.conditions.push(Condition::Gt(field.to_owned(), value.into()));
        self
    }

    pub fn matches(&self, doc: &Document) -> bool {
        self.conditions.iter().all(|c| c.matches(doc))
    }
}

/// Ordered index key. Integers sort numerically; other scalars by their
/// JSON rendering within their own kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum IndexKey {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
    Other(String),
}

impl IndexKey {
    fn of(value: &Value) -> Self {
        match value {
            Value::Null => IndexKey::Null,
            Value::Bool(b) => IndexKey::Bool(*b),
            Value::Number(n) => n.as_i64().map(IndexKey::Int).unwrap_or_else(|| IndexKey::Other(n.to_string())),
            Value::String(s) => IndexKey::Str(s.clone()),
            other => IndexKey::Other(other.to_string()),
        }
    }
}

/// Operations persisted by the journaled backend.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum DocOp {
    Put { collection: String, id: String, doc: Document },
    Delete { collection: String, id: String },
}

#[derive(Default)]
struct Tables {
    indexed: Vec<String>,
    collections: HashMap<String, BTreeMap<String, Document>>,
    indexes: HashMap<(String, String), BTreeMap<IndexKey, BTreeSet<String>>>,
}

impl Tables {
    fn new(indexed: &[&str]) -> Self {
        Self { indexed: indexed.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    fn unindex(&mut self, collection: &str, id: &str, doc: &Document) {
        for field in &self.indexed {
            if let Some(v) = doc.get(field) {
                if let Some(idx) = self.indexes.get_mut(&(collection.to_owned(), field.clone())) {
                    let key = IndexKey::of(v);
                    if let Some(set) = idx.get_mut(&key) {
                        set.remove(id);
                        if set.is_empty() {
                            idx.remove(&key);
                        }
                    }
                }
            }
        }
    }

    fn index(&mut self, collection: &str, id: &str, doc: &Document) {
        for field in &self.indexed {
            if let Some(v) = doc.get(field) {
                self.indexes
                    .entry((collection.to_owned(), field.clone()))
                    .or_default()
                    .entry(IndexKey::of(v))
                    .or_default()
                    .insert(id.to_owned());
            }
        }
    }

    fn put(&mut self, collection: &str, id: &str, doc: Document) {
        if let Some(old) = self.collections.get(collection).and_then(|c| c.get(id)).cloned() {
            self.unindex(collection, id, &old);
        }
        self.index(collection, id, &doc);
        self.collections.entry(collection.to_owned()).or_default().insert(id.to_owned(), doc);
    }

    fn delete(&mut self, collection: &str, id: &str) -> bool {
        let removed = self.collections.get_mut(collection).and_then(|c| c.remove(id));
        match removed {
            Some(old) => {
                self.unindex(collection, id, &old);
                true
            }
            None => false,
        }
    }

    fn get(&self, collection: &str, id: &str) -> Option<&Document> {
        self.collections.get(collection)?.get(id)
    }

    fn apply(&mut self, op: DocOp) {
        match op {
            DocOp::Put { collection, id, doc } => self.put(&collection, &id, doc),
            DocOp::Delete { collection, id } => {
                self.delete(&collection, &id);
            }
        }
    }

    /// Candidate ids from the first indexed condition, or `None` for a scan.
    fn candidates(&self, collection: &str, query: &Query) -> Option<BTreeSet<String>> {
        let indexed = |c: &&Condition| self.indexed.iter().any(|f| f == c.field());
        let cond = query
            .conditions
            .iter()
            .filter(indexed)
            .find(|c| matches!(c, Condition::Eq(..)))
            .or_else(|| query.conditions.iter().find(indexed))?;
        let idx = self.indexes.get(&(collection.to_owned(), cond.field().to_owned()));
        let Some(idx) = idx else { return Some(BTreeSet::new()) };
        let ids = match cond {
            Condition::Eq(_, v) => idx.get(&IndexKey::of(v)).cloned().unwrap_or_default(),
            Condition::Lt(_, v) => {
                idx.range(..IndexKey::of(v)).flat_map(|(_, s)| s.iter().cloned()).collect()
            }
            Condition::Gt(_, v) => idx
                .range((Bound::Excluded(IndexKey::of(v)), Bound::Unbounded))
                .flat_map(|(_, s)| s.iter().cloned())
                .collect(),
        };
        Some(ids)
    }

    fn query(&self, collection: &str, query: &Query) -> Vec<Document> {
        let Some(table) = self.collections.get(collection) else { return Vec::new() };
        match self.candidates(collection, query) {
            Some(ids) => ids
                .iter()
                .filter_map(|id| table.get(id))
                .filter(|d| query.matches(d))
                .cloned()
                .collect(),
            None => table.values().filter(|d| query.matches(d)).cloned().collect(),
        }
    }

    fn snapshot(&self) -> Vec<DocOp> {
        self.collections
            .iter()
            .flat_map(|(c, table)| {
                table.iter().map(move |(id, doc)| DocOp::Put {
                    collection: c.clone(),
                    id: id.clone(),
                    doc: doc.clone(),
                })
            })
            .collect()
    }
}

fn as_object(value: Value) -> Result<Document> {
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(StorageError::NotAnObject),
    }
}

/// Document-oriented persistence. Every method is atomic per document;
/// `compare_and_*` are linearizable.
pub trait DocumentStore: Send + Sync {
    fn put(&self, collection: &str, id: &str, doc: Value) -> Result<()>;

    /// Writes only if `id` is absent. Returns whether the write happened.
    fn insert(&self, collection: &str, id: &str, doc: Value) -> Result<bool>;

    fn get(&self, collection: &str, id: &str) -> Result<Option<Value>>;

    fn query(&self, collection: &str, query: &Query) -> Result<Vec<Value>>;

    /// Idempotent. Returns whether a document was removed.
    fn delete(&self, collection: &str, id: &str) -> Result<bool>;

    /// Applies `patch` (shallow field merge) iff `field` currently equals
    /// `expected`.
    fn compare_and_update(
        &self,
        collection: &str,
        id: &str,
        field: &str,
        expected: &Value,
        patch: Document,
    ) -> Result<bool>;

    fn compare_and_swap(
        &self,
        collection: &str,
        id: &str,
        field: &str,
        expected: &Value,
        new: Value,
    ) -> Result<bool> {
        let mut patch = Document::new();
        patch.insert(field.to_owned(), new);
        self.compare_and_update(collection, id, field, expected, patch)
    }

    /// Every document in a collection, for audits and tests.
    fn scan(&self, collection: &str) -> Result<Vec<Value>> {
        self.query(collection, &Query::all())
    }

    fn collections(&self) -> Result<Vec<String>>;
}

fn patched(current: &Document, field: &str, expected: &Value, patch: Document) -> Option<Document> {
    if current.get(field).unwrap_or(&Value::Null) != expected {
        return None;
    }
    let mut next = current.clone();
    next.extend(patch);
    Some(next)
}

pub struct MemoryDocumentStore {
    tables: RwLock<Tables>,
}

impl MemoryDocumentStore {
    pub fn new() -> Self {
        Self::with_indexes(DEFAULT_INDEXED_FIELDS)
    }

    pub fn with_indexes(fields: &[&str]) -> Self {
        Self { tables: RwLock::new(Tables::new(fields)) }
    }
}

impl Default for MemoryDocumentStore {
    fn default() -> Self {
        Self::new()
    }
}

impl DocumentStore for MemoryDocumentStore {
    fn put(&self, collection: &str, id: &str, doc: Value) -> Result<()> {
        let doc = as_object(doc)?;
        self.tables.write().put(collection, id, doc);
        Ok(())
    }

    fn insert(&self, collection: &str, id: &str, doc: Value) -> Result<bool> {
        let doc = as_object(doc)?;
        let mut tables = self.tables.write();
        if tables.get(collection, id).is_some() {
            return Ok(false);
        }
        tables.put(collection, id, doc);
        Ok(true)
    }

    fn get(&self, collection: &str, id: &str) -> Result<Option<Value>> {
        Ok(self.tables.read().get(collection, id).cloned().map(Value::Object))
    }

    fn query(&self, collection: &str, query: &Query) -> Result<Vec<Value>> {
        Ok(self.tables.read().query(collection, query).into_iter().map(Value::Object).collect())
    }

    fn delete(&self, collection: &str, id: &str) -> Result<bool> {
        Ok(self.tables.write().delete(collection, id))
    }

    fn compare_and_update(
        &self,
        collection: &str,
        id: &str,
        field: &str,
        expected: &Value,
        patch: Document,
    ) -> Result<bool> {
        let mut tables = self.tables.write();
        let Some(current) = tables.get(collection, id) else { return Ok(false) };
        match patched(current, field, expected, patch) {
            Some(next) => {
                tables.put(collection, id, next);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn collections(&self) -> Result<Vec<String>> {
        Ok(self.tables.read().collections.keys().cloned().collect())
    }
}

/// Durable backend: the in-memory tables plus a journal that is replayed
/// and compacted on open.
pub struct FileDocumentStore {
    tables: RwLock<Tables>,
    journal: Mutex<Journal<DocOp>>,
}

impl FileDocumentStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path, DEFAULT_INDEXED_FIELDS, false)
    }

    /// `sync` forces an fsync after every write.
    pub fn open_with(path: impl AsRef<Path>, indexed: &[&str], sync: bool) -> Result<Self> {
        let mut tables = Tables::new(indexed);
        let mut journal = Journal::open(path.as_ref(), sync, |op| tables.apply(op))?;
        journal.rewrite(tables.snapshot().iter())?;
        Ok(Self { tables: RwLock::new(tables), journal: Mutex::new(journal) })
    }

    fn commit(&self, tables: &mut Tables, op: DocOp) -> Result<()> {
        self.journal.lock().append(&op)?;
        tables.apply(op);
        Ok(())
    }
}

impl DocumentStore for FileDocumentStore {
    fn put(&self, collection: &str, id: &str, doc: Value) -> Result<()> {
        let doc = as_object(doc)?;
        let mut tables = self.tables.write();
        self.commit(&mut tables, DocOp::Put { collection: collection.into(), id: id.into(), doc })
    }

    fn insert(&self, collection: &str, id: &str, doc: Value) -> Result<bool> {
        let doc = as_object(doc)?;
        let mut tables = self.tables.write();
        if tables.get(collection, id).is_some() {
            return Ok(false);
        }
        self.commit(&mut tables, DocOp::Put { collection: collection.into(), id: id.into(), doc })?;
        Ok(true)
    }

    fn get(&self, collection: &str, id: &str) -> Result<Option<Value>> {
        Ok(self.tables.read().get(collection, id).cloned().map(Value::Object))
    }

    fn query(&self, collection: &str, query: &Query) -> Result<Vec<Value>> {
        Ok(self.tables.read().query(collection, query).into_iter().map(Value::Object).collect())
    }

    fn delete(&self, collection: &str, id: &str) -> Result<bool> {
        let mut tables = self.tables.write();
        if tables.get(collection, id).is_none() {
            return Ok(false);
        }
        self.commit(&mut tables, DocOp::Delete { collection: collection.into(), id: id.into() })?;
        Ok(true)
    }

    fn compare_and_update(
        &self,
        collection: &str,
        id: &str,
        field: &str,
        expected: &Value,
        patch: Document,
    ) -> Result<bool> {
        let mut tables = self.tables.write();
        let Some(current) = tables.get(collection, id) else { return Ok(false) };
        match patched(current, field, expected, patch) {
            Some(doc) => {
                self.commit(&mut tables, DocOp::Put { collection: collection.into(), id: id.into(), doc })?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn collections(&self) -> Result<Vec<String>> {
        Ok(self.tables.read().collections.keys().cloned().collect())
    }
}
