use std::sync::{Arc, Barrier};
use std::thread;

use chrono::Duration;
use medshare_storage::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

#[test]
fn file_store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db").join("docs.jsonl");
    {
        let store = FileDocumentStore::open(&path).unwrap();
        store.put("ehr", "r1", json!({"owner_id": "alice", "size": 3})).unwrap();
        store.put("ehr", "r2", json!({"owner_id": "bob"})).unwrap();
        store.delete("ehr", "r2").unwrap();
        assert!(store
            .compare_and_swap("ehr", "r1", "size", &json!(3), json!(4))
            .unwrap());
    }
    let reopened = FileDocumentStore::open(&path).unwrap();
    assert_eq!(reopened.get("ehr", "r1").unwrap(), Some(json!({"owner_id": "alice", "size": 4})));
    assert_eq!(reopened.get("ehr", "r2").unwrap(), None);
    assert_eq!(reopened.query("ehr", &Query::all().eq("owner_id", "alice")).unwrap().len(), 1);
}

#[test]
fn torn_final_journal_line_is_tolerated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.jsonl");
    {
        let store = FileDocumentStore::open(&path).unwrap();
        store.put("c", "a", json!({"v": 1})).unwrap();
    }
    let mut raw = std::fs::read(&path).unwrap();
    raw.extend_from_slice(b"{\"op\":\"put\",\"collec");
    std::fs::write(&path, raw).unwrap();
    let store = FileDocumentStore::open(&path).unwrap();
    assert_eq!(store.get("c", "a").unwrap(), Some(json!({"v": 1})));

    std::fs::write(&path, b"garbage\n{\"op\":\"delete\",\"collection\":\"c\",\"id\":\"a\"}\n").unwrap();
    assert!(matches!(
        FileDocumentStore::open(&path),
        Err(StorageError::CorruptJournal { line: 1, .. })
    ));
}

#[test]
fn ttl_file_store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ttl.jsonl");
    let clock = ManualClock::starting_now();
    let shared: SharedClock = Arc::new(clock.clone());
    {
        let store = FileTtlStore::open(&path, shared.clone()).unwrap();
        store.set("fam:1", b"jti-1".to_vec(), Duration::days(7)).unwrap();
        store.set("fam:2", b"jti-x".to_vec(), Duration::seconds(5)).unwrap();
        assert!(store.compare_and_swap("fam:1", b"jti-1", b"jti-2".to_vec(), None).unwrap());
    }
    clock.advance(Duration::seconds(10));
    let store = FileTtlStore::open(&path, shared).unwrap();
    assert_eq!(store.get("fam:1").unwrap(), Some(b"jti-2".to_vec()));
    assert_eq!(store.get("fam:2").unwrap(), None);
}

fn race_documents(store: Arc<dyn DocumentStore>) {
    for round in 0..200 {
        let id = format!("share-{round}");
        store.put("shares", &id, json!({"status": "pending"})).unwrap();
        let barrier = Arc::new(Barrier::new(2));
        let handles: Vec<_> = ["accepted", "declined"]
            .into_iter()
            .map(|target| {
                let (store, barrier, id) = (store.clone(), barrier.clone(), id.clone());
                thread::spawn(move || {
                    barrier.wait();
                    store.compare_and_swap("shares", &id, "status", &json!("pending"), json!(target)).unwrap()
                })
            })
            .collect();
        let wins: Vec<bool> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(wins.iter().filter(|w| **w).count(), 1, "round {round}: {wins:?}");
        let status = store.get("shares", &id).unwrap().unwrap()["status"].clone();
        let winner = if wins[0] { "accepted" } else { "declined" };
        assert_eq!(status, json!(winner));
    }
}

#[test]
fn concurrent_cas_has_exactly_one_winner() {
    race_documents(Arc::new(MemoryDocumentStore::new()));
    let dir = tempfile::tempdir().unwrap();
    race_documents(Arc::new(FileDocumentStore::open(dir.path().join("d.jsonl")).unwrap()));
}

#[test]
fn concurrent_ttl_cas_has_exactly_one_winner() {
    let store: Arc<dyn TtlStore> = Arc::new(MemoryTtlStore::new(Arc::new(SystemClock)));
    for round in 0..200 {
        store.set("fam", b"current".to_vec(), Duration::minutes(1)).unwrap();
        let barrier = Arc::new(Barrier::new(4));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let (store, barrier) = (store.clone(), barrier.clone());
                thread::spawn(move || {
                    barrier.wait();
                    store.compare_and_swap("fam", b"current", format!("next-{i}").into_bytes(), None).unwrap()
                })
            })
            .collect();
        let wins = handles.into_iter().map(|h| h.join().unwrap()).filter(|w| *w).count();
        assert_eq!(wins, 1, "round {round}");
    }
}

#[test]
fn owner_query_matches_brute_force_over_1000_records() {
    let store = MemoryDocumentStore::new();
    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    let mut all = Vec::new();
    for i in 0..1000 {
        let status = ["pending", "accepted", "revoked"][rng.gen_range(0..3)];
        let doc = json!({
            "owner_id": format!("user-{}", rng.gen_range(0..37)),
            "status": status,
            "n": i,
        });
        store.put("ehr", &format!("r{i}"), doc.clone()).unwrap();
        all.push(doc);
    }
    for owner in 0..37 {
        let owner = format!("user-{owner}");
        let mut got: Vec<i64> = store
            .query("ehr", &Query::all().eq("owner_id", owner.as_str()))
            .unwrap()
            .iter()
            .map(|d| d["n"].as_i64().unwrap())
            .collect();
        got.sort();
        let expected: Vec<i64> = all
            .iter()
            .filter(|d| d["owner_id"] == Value::from(owner.as_str()))
            .map(|d| d["n"].as_i64().unwrap())
            .collect();
        assert_eq!(got, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Indexed and scanned plans agree with a plain filter.
    #[test]
    fn query_planner_agrees_with_filter(
        docs in proptest::collection::vec((0u8..5, 0u8..3, proptest::option::of(0i64..50)), 0..60),
        owner in 0u8..5,
        status in 0u8..3,
        cutoff in 0i64..50,
    ) {
        let indexed = MemoryDocumentStore::new();
        let unindexed = MemoryDocumentStore::with_indexes(&[]);
        let mut raw = Vec::new();
        for (i, (o, s, e)) in docs.iter().enumerate() {
            let doc = json!({"owner_id": format!("o{o}"), "status": format!("s{s}"), "expiry": e, "i": i});
            indexed.put("x", &i.to_string(), doc.clone()).unwrap();
            unindexed.put("x", &i.to_string(), doc.clone()).unwrap();
            raw.push(doc);
        }
        let query = Query::all()
            .eq("status", format!("s{status}"))
            .lt("expiry", cutoff);
        let oracle: Vec<i64> = raw.iter()
            .filter(|d| d["status"] == json!(format!("s{status}")))
            .filter(|d| d["expiry"].as_i64().map_or(false, |e| e < cutoff))
            .map(|d| d["i"].as_i64().unwrap())
            .collect();
        for store in [&indexed, &unindexed] {
            let mut got: Vec<i64> = store.query("x", &query).unwrap().iter().map(|d| d["i"].as_i64().unwrap()).collect();
            got.sort();
            prop_assert_eq!(&got, &oracle);
        }
        let by_owner = indexed.query("x", &Query::all().eq("owner_id", format!("o{owner}"))).unwrap().len();
        prop_assert_eq!(by_owner, raw.iter().filter(|d| d["owner_id"] == json!(format!("o{owner}"))).count());
    }
}
