mod common;

use std::collections::HashSet;

use chrono::Duration;
use common::{fixture, world, world_with, Tamper};
use medshare_auth::Role;
use medshare_resource::{
    AcceptTerms, Decision, Direction, ResourceConfig, ResourceError, ShareStatus,
};

fn accept_terms(hours: Option<i64>, now: chrono::DateTime<chrono::Utc>) -> AcceptTerms {
    AcceptTerms { expiry: hours.map(|h| now + Duration::hours(h)), threshold: None, shares: None }
}

#[tokio::test]
async fn owner_round_trip_without_proxy() {
    let w = world();
    let (alice, _, _) = w.cast();
    let data = fixture(1024 * 1024, 1);
    let rec = w.upload(&alice, data.clone()).await;
    assert_eq!(rec.size_bytes, data.len() as u64);

    let (body, _, _) = w.svc.stored_material(&rec.resource_id).unwrap().unwrap();
    assert_eq!(body.len(), data.len() + 16);
    for off in (0..data.len()).step_by(4099) {
        assert!(body[off..off + 16] != data[off..off + 16], "offset {off}");
    }

    let before = w.proxy.reencapsulations();
    let got = w.svc.retrieve_ehr(&alice.caller(), &rec.resource_id, alice.keys.secret()).await.unwrap();
    assert_eq!(got.bytes, data);
    assert!(!got.via_proxy);
    assert_eq!(w.proxy.reencapsulations(), before);
}

#[tokio::test]
async fn empty_file_round_trips() {
    let w = world();
    let (alice, _, te) = w.cast();
    let rec = w.upload(&alice, Vec::new()).await;
    let got = w.svc.retrieve_ehr(&alice.caller(), &rec.resource_id, alice.keys.secret()).await.unwrap();
    assert!(got.bytes.is_empty());
    let got = w.svc.retrieve_ehr(&te.caller(), &rec.resource_id, te.keys.secret()).await.unwrap();
    assert!(got.bytes.is_empty());
}

#[tokio::test]
async fn upload_validation() {
    let w = world_with(ResourceConfig { max_upload_bytes: 1000, ..Default::default() });
    let (alice, _, _) = w.cast();
    let c = alice.caller();
    let k = alice.owner_keys();
    let err = w.svc.upload_ehr(&c, &k, "notes.txt", None, vec![1]).await.unwrap_err();
    assert!(matches!(err, ResourceError::Validation(_)));
    let err = w.svc.upload_ehr(&c, &k, "x.bin", Some("text/plain"), vec![1]).await.unwrap_err();
    assert!(matches!(err, ResourceError::Validation(_)));
    let err = w.svc.upload_ehr(&c, &k, "x.pdf", None, vec![0; 1001]).await.unwrap_err();
    assert!(matches!(err, ResourceError::TooLarge { size: 1001, limit: 1000 }));
    w.svc.upload_ehr(&c, &k, "x.bin", Some("image/png"), vec![0; 1000]).await.unwrap();
    w.svc.upload_ehr(&c, &k, "x.JPG", None, vec![0; 10]).await.unwrap();

    // Keys that do not belong to the caller.
    let other = w.user(&[Role::Patient]);
    let err = w.svc.upload_ehr(&c, &other.owner_keys(), "x.pdf", None, vec![1]).await.unwrap_err();
    assert!(matches!(err, ResourceError::Validation(_)));
}

#[tokio::test]
async fn upload_requires_trusted_entity() {
    let w = world();
    let alice = w.user(&[Role::Patient]);
    let err = w.svc.upload_ehr(&alice.caller(), &alice.owner_keys(), "a.pdf", None, vec![1, 2]).await.unwrap_err();
    assert!(matches!(err, ResourceError::Configuration(_)));
    assert!(w.svc.list_ehrs(&alice.caller()).unwrap().owned.is_empty());
}

#[tokio::test]
async fn upload_rolls_back_when_proxy_unreachable() {
    let w = world();
    let (alice, _, _) = w.cast();
    w.proxy.set_down(true);
    let err = w.svc.upload_ehr(&alice.caller(), &alice.owner_keys(), "a.pdf", None, vec![1, 2]).await.unwrap_err();
    assert!(matches!(err, ResourceError::Proxy(_)));
    assert!(w.svc.list_ehrs(&alice.caller()).unwrap().owned.is_empty());
    assert!(w.svc.all_shares().unwrap().is_empty());
    assert!(w.docs.scan(medshare_resource::service::RECORDS).unwrap().is_empty());
}

#[tokio::test]
async fn break_glass_bootstrap_and_policy() {
    let w = world();
    let (alice, bob, te) = w.cast();
    let r1 = w.upload(&alice, b"first".to_vec()).await;
    let r2 = w.upload(&alice, b"second".to_vec()).await;

    let bg: Vec<_> = w.svc.all_shares().unwrap().into_iter().filter(|s| s.break_glass).collect();
    assert_eq!(bg.len(), 2);
    for s in &bg {
        assert_eq!(s.status, ShareStatus::Accepted);
        assert_eq!(s.delegatee_id, te.id());
        assert_eq!(s.delegator_id, alice.id());
        assert!(s.expiry.is_none());
    }
    let e1 = w.proxy_service.entry(&bg[0].share_id).unwrap().unwrap();
    let e2 = w.proxy_service.entry(&bg[1].share_id).unwrap().unwrap();
    assert_ne!(e1.kfrags, e2.kfrags);

    for (rec, want) in [(&r1, &b"first"[..]), (&r2, &b"second"[..])] {
        let got = w.svc.retrieve_ehr(&te.caller(), &rec.resource_id, te.keys.secret()).await.unwrap();
        assert_eq!(got.bytes, want);
        assert!(got.via_proxy);
    }

    let err = w.svc.revoke_share(&alice.caller(), &bg[0].share_id).await.unwrap_err();
    assert!(matches!(err, ResourceError::Forbidden(_)));

    // Hidden from the owner's and the practitioner's listings, visible to the trusted entity.
    assert!(w.svc.list_share_requests(&alice.caller(), Direction::Incoming).unwrap().is_empty());
    assert!(w.svc.list_share_requests(&bob.caller(), Direction::Outgoing).unwrap().is_empty());
    assert_eq!(w.svc.list_share_requests(&te.caller(), Direction::Outgoing).unwrap().len(), 2);
    assert_eq!(w.svc.list_ehrs(&te.caller()).unwrap().shared.len(), 2);
}

#[tokio::test]
async fn request_share_rules() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, b"x".to_vec()).await;

    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    assert_eq!(s.status, ShareStatus::Pending);
    assert_eq!((s.delegator_id.as_str(), s.delegatee_id.as_str()), (alice.id(), bob.id()));

    let own = w.svc.request_share(&alice.caller(), &rec.resource_id).await.unwrap_err();
    assert!(matches!(own, ResourceError::BusinessRule(_)));
    let dup = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap_err();
    assert!(matches!(dup, ResourceError::Conflict(_)));
    let missing = w.svc.request_share(&bob.caller(), "nope").await.unwrap_err();
    assert!(matches!(missing, ResourceError::NotFound(_)));

    w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Decline, None, AcceptTerms::default()).await.unwrap();
    let again = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    assert_ne!(again.share_id, s.share_id);
}

#[tokio::test]
async fn accept_then_delegatee_retrieves_with_one_proxy_trip() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let data = fixture(10 * 1024 * 1024, 2);
    let rec = w.upload(&alice, data.clone()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();

    let denied = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
    assert!(matches!(denied, ResourceError::Forbidden(_)));

    let keys = alice.owner_keys();
    let accepted = w
        .svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&keys), accept_terms(Some(24), w.svc.now()))
        .await
        .unwrap();
    assert_eq!(accepted.status, ShareStatus::Accepted);
    assert!(accepted.expiry.is_some());

    let before = w.proxy.reencapsulations();
    let got = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap();
    assert_eq!(got.bytes, data);
    assert_eq!(w.proxy.reencapsulations(), before + 1);

    // Listings reflect the grant.
    let listing = w.svc.list_ehrs(&bob.caller()).unwrap();
    assert!(listing.owned.is_empty());
    assert_eq!(listing.shared.len(), 1);
    assert_eq!(listing.shared[0].record.resource_id, rec.resource_id);

    // Wrong secret for the delegatee.
    let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, alice.keys.secret()).await.unwrap_err();
    assert!(matches!(err, ResourceError::Validation(_)));
}

#[tokio::test]
async fn threshold_shares_round_trip() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, b"threshold".to_vec()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    let terms = AcceptTerms { expiry: None, threshold: Some(3), shares: Some(5) };
    w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), terms).await.unwrap();
    assert_eq!(w.proxy_service.entry(&s.share_id).unwrap().unwrap().kfrags.len(), 5);
    let got = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap();
    assert_eq!(got.bytes, b"threshold");

    *w.proxy.tamper.lock().unwrap() = Some(Tamper::DropAllButOne);
    let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
    assert!(matches!(err, ResourceError::Threshold { needed: 3, got: 1 }));

    *w.proxy.tamper.lock().unwrap() = Some(Tamper::FlipFirstCfrag);
    let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
    assert!(matches!(err, ResourceError::Integrity(_)));
}

#[tokio::test]
async fn answer_rules() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let carol = w.user(&[Role::Practitioner]);
    let rec = w.upload(&alice, b"x".to_vec()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    let keys = alice.owner_keys();
    let now = w.svc.now();

    let err = w.svc.answer_share(&carol.caller(), &s.share_id, Decision::Accept, Some(&keys), accept_terms(None, now)).await;
    assert!(matches!(err, Err(ResourceError::Forbidden(_))));
    let err = w.svc.answer_share(&bob.caller(), &s.share_id, Decision::Decline, None, AcceptTerms::default()).await;
    assert!(matches!(err, Err(ResourceError::Forbidden(_))));

    let past = AcceptTerms { expiry: Some(now - Duration::seconds(1)), ..Default::default() };
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&keys), past).await;
    assert!(matches!(err, Err(ResourceError::Validation(_))));
    let bad_t = AcceptTerms { threshold: Some(3), shares: Some(2), ..Default::default() };
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&keys), bad_t).await;
    assert!(matches!(err, Err(ResourceError::Validation(_))));
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&bob.owner_keys()), accept_terms(None, now)).await;
    assert!(matches!(err, Err(ResourceError::Validation(_))));
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, None, accept_terms(None, now)).await;
    assert!(matches!(err, Err(ResourceError::Validation(_))));

    // Proxy failure leaves the request pending.
    w.proxy.set_down(true);
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&keys), accept_terms(None, now)).await;
    assert!(matches!(err, Err(ResourceError::Proxy(_))));
    assert_eq!(w.svc.get_share(&s.share_id).unwrap().unwrap().status, ShareStatus::Pending);
    w.proxy.set_down(false);

    let declined = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Decline, None, AcceptTerms::default()).await.unwrap();
    assert_eq!(declined.status, ShareStatus::Declined);
    assert!(w.proxy_service.entry(&s.share_id).unwrap().is_none());
    let err = w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&keys), accept_terms(None, now)).await;
    assert!(matches!(err, Err(ResourceError::State { .. })));

    // Declined requests stay visible.
    let incoming = w.svc.list_share_requests(&alice.caller(), Direction::Incoming).unwrap();
    assert_eq!(incoming.len(), 1);
    assert_eq!(incoming[0].share.status, ShareStatus::Declined);
    assert_eq!(incoming[0].filename.as_deref(), Some("scan.pdf"));
}

#[tokio::test]
async fn revoke_is_immediate_and_leaves_record_untouched() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, fixture(4096, 3)).await;
    let before = w.svc.stored_material(&rec.resource_id).unwrap();
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();

    let err = w.svc.revoke_share(&alice.caller(), &s.share_id).await.unwrap_err();
    assert!(matches!(err, ResourceError::State { .. }));

    w.svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), AcceptTerms::default())
        .await
        .unwrap();
    w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap();

    let err = w.svc.revoke_share(&bob.caller(), &s.share_id).await.unwrap_err();
    assert!(matches!(err, ResourceError::Forbidden(_)));
    let revoked = w.svc.revoke_share(&alice.caller(), &s.share_id).await.unwrap();
    assert_eq!(revoked.status, ShareStatus::Revoked);
    assert!(w.proxy_service.entry(&s.share_id).unwrap().is_none());

    let trips = w.proxy.reencapsulations();
    for _ in 0..10 {
        let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
        assert!(matches!(err, ResourceError::Forbidden(_)));
    }
    assert_eq!(w.proxy.reencapsulations(), trips);
    assert_eq!(w.svc.stored_material(&rec.resource_id).unwrap(), before);
    assert_eq!(w.svc.get_record(&rec.resource_id).unwrap().unwrap(), rec);
}

#[tokio::test]
async fn expiry_enforced_at_read_time_and_by_sweep() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, b"temp".to_vec()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    let accepted = w
        .svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), accept_terms(Some(1), w.svc.now()))
        .await
        .unwrap();
    let t = accepted.expires_at().unwrap();
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 0);

    w.clock.set(t);
    w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap();
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 0);

    w.clock.set(t + Duration::milliseconds(1));
    let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
    assert!(matches!(err, ResourceError::Forbidden(_)));
    assert!(w.svc.list_ehrs(&bob.caller()).unwrap().shared.is_empty());

    assert_eq!(w.svc.sweep_expired().await.unwrap(), 1);
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 0);
    assert_eq!(w.svc.get_share(&s.share_id).unwrap().unwrap().status, ShareStatus::Expired);
    assert!(w.proxy_service.entry(&s.share_id).unwrap().is_none());
    let err = w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap_err();
    assert!(matches!(err, ResourceError::Forbidden(_)));

    // Break-glass access never expires.
    w.clock.advance(Duration::days(3650));
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 0);
}

#[tokio::test]
async fn sweep_retries_after_proxy_failure() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, b"x".to_vec()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    w.svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), accept_terms(Some(1), w.svc.now()))
        .await
        .unwrap();
    w.clock.advance(Duration::hours(2));
    w.proxy.set_down(true);
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 0);
    assert_eq!(w.svc.get_share(&s.share_id).unwrap().unwrap().status, ShareStatus::Accepted);
    w.proxy.set_down(false);
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 1);
}

#[tokio::test]
async fn concurrent_answers_single_winner() {
    for _ in 0..10 {
        let w = world();
        let (alice, bob, _) = w.cast();
        let rec = w.upload(&alice, b"x".to_vec()).await;
        let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
        let mut tasks = Vec::new();
        for i in 0..4 {
            let svc = w.svc.clone();
            let caller = alice.caller();
            let keys = alice.owner_keys();
            let id = s.share_id.clone();
            tasks.push(tokio::spawn(async move {
                let decision = if i % 2 == 0 { Decision::Accept } else { Decision::Decline };
                svc.answer_share(&caller, &id, decision, Some(&keys), AcceptTerms::default()).await
            }));
        }
        let mut wins = 0;
        for t in tasks {
            if t.await.unwrap().is_ok() {
                wins += 1;
            }
        }
        assert_eq!(wins, 1);
        let status = w.svc.get_share(&s.share_id).unwrap().unwrap().status;
        // Kfrags exist at the proxy exactly when the winner accepted.
        assert_eq!(w.proxy_service.entry(&s.share_id).unwrap().is_some(), status == ShareStatus::Accepted);
    }
}

#[tokio::test]
async fn revoke_and_sweep_race_single_transition() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let rec = w.upload(&alice, b"x".to_vec()).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    w.svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), accept_terms(Some(1), w.svc.now()))
        .await
        .unwrap();
    w.clock.advance(Duration::hours(2));
    let (svc1, svc2, caller, id) = (w.svc.clone(), w.svc.clone(), alice.caller(), s.share_id.clone());
    let revoke = tokio::spawn(async move { svc1.revoke_share(&caller, &id).await.is_ok() });
    let sweep = tokio::spawn(async move { svc2.sweep_expired().await.unwrap() });
    let (revoked, swept) = (revoke.await.unwrap(), sweep.await.unwrap());
    assert_eq!(usize::from(revoked) + swept, 1);
}

/// 100 accepted shares with random expiries; the sweep must move exactly
/// those a brute-force filter says are past due.
#[tokio::test]
async fn sweep_matches_brute_force_filter() {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    let w = world();
    let (alice, _, _) = w.cast();
    let delegatees: Vec<_> = (0..10).map(|_| w.user(&[Role::Practitioner])).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut plan: Vec<bool> = (0..100).map(|i| i < 40).collect();
    plan.shuffle(&mut rng);

    let start = w.svc.now();
    let cutoff = start + Duration::minutes(500) + Duration::seconds(30);
    let mut i = 0;
    for _ in 0..10 {
        let rec = w.upload(&alice, vec![1, 2, 3]).await;
        for d in &delegatees {
            let s = w.svc.request_share(&d.caller(), &rec.resource_id).await.unwrap();
            let expiry = if plan[i] {
                Some(start + Duration::minutes(rng.gen_range(1..=500)))
            } else if rng.gen_bool(0.3) {
                None
            } else {
                Some(start + Duration::minutes(rng.gen_range(501..=1000)))
            };
            let terms = AcceptTerms { expiry, ..Default::default() };
            w.svc.answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), terms).await.unwrap();
            i += 1;
        }
    }

    let expected: HashSet<String> = w
        .svc
        .all_shares()
        .unwrap()
        .into_iter()
        .filter(|s| s.status == ShareStatus::Accepted && s.expiry.is_some_and(|e| e < cutoff.timestamp_millis()))
        .map(|s| s.share_id)
        .collect();
    assert_eq!(expected.len(), 40);

    w.clock.set(cutoff);
    assert_eq!(w.svc.sweep_expired().await.unwrap(), 40);
    let actual: HashSet<String> = w
        .svc
        .all_shares()
        .unwrap()
        .into_iter()
        .filter(|s| s.status == ShareStatus::Expired)
        .map(|s| s.share_id)
        .collect();
    assert_eq!(actual, expected);
    let still: usize = w.svc.all_shares().unwrap().iter().filter(|s| s.status == ShareStatus::Accepted).count();
    assert_eq!(still, 60 + 10);
}

#[tokio::test]
async fn listings() {
    let w = world();
    let (alice, bob, _) = w.cast();
    let fresh = w.svc.list_ehrs(&bob.caller()).unwrap();
    assert!(fresh.owned.is_empty() && fresh.shared.is_empty());
    assert!(w.svc.list_share_requests(&bob.caller(), Direction::Outgoing).unwrap().is_empty());

    let rec = w.upload(&alice, b"x".to_vec()).await;
    assert_eq!(w.svc.list_ehrs(&alice.caller()).unwrap().owned.len(), 1);

    w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    let incoming = w.svc.list_share_requests(&alice.caller(), Direction::Incoming).unwrap();
    assert_eq!(incoming.len(), 1);
    assert_eq!(incoming[0].share.status, ShareStatus::Pending);
    assert_eq!(incoming[0].delegatee_name.as_deref(), Some(bob.account.name.as_str()));
    assert_eq!(w.svc.list_share_requests(&bob.caller(), Direction::Outgoing).unwrap().len(), 1);
}

/// Neither the document store nor the blob store ever holds a secret key,
/// in any encoding we use.
#[tokio::test]
async fn stores_never_contain_secret_keys() {
    use base64::engine::general_purpose::{STANDARD, URL_SAFE_NO_PAD};
    use base64::Engine;

    let w = world();
    let (alice, bob, te) = w.cast();
    let rec = w.upload(&alice, fixture(2048, 9)).await;
    let s = w.svc.request_share(&bob.caller(), &rec.resource_id).await.unwrap();
    w.svc
        .answer_share(&alice.caller(), &s.share_id, Decision::Accept, Some(&alice.owner_keys()), AcceptTerms::default())
        .await
        .unwrap();
    w.svc.retrieve_ehr(&bob.caller(), &rec.resource_id, bob.keys.secret()).await.unwrap();
    w.svc.retrieve_ehr(&te.caller(), &rec.resource_id, te.keys.secret()).await.unwrap();
    w.svc.revoke_share(&alice.caller(), &s.share_id).await.unwrap();

    let mut secrets: Vec<Vec<u8>> = Vec::new();
    for u in [&alice, &bob, &te] {
        secrets.push(u.keys.secret().to_bytes().to_vec());
        secrets.push(u.signer.signing().to_bytes().to_vec());
    }
    let mut dump = String::new();
    for collection in w.docs.collections().unwrap() {
        dump.push_str(&serde_json::to_string(&w.docs.scan(&collection).unwrap()).unwrap());
    }
    for entry in w.proxy_service.entries().unwrap() {
        dump.push_str(&serde_json::to_string(&entry).unwrap());
    }
    let body = w.blobs.get(&rec.resource_id).unwrap().unwrap();
    for sk in &secrets {
        assert!(!dump.contains(&STANDARD.encode(sk)));
        assert!(!dump.contains(&URL_SAFE_NO_PAD.encode(sk)));
        let hex: String = sk.iter().map(|b| format!("{b:02x}")).collect();
        assert!(!dump.contains(&hex));
        assert!(!body.windows(sk.len()).any(|win| win == sk.as_slice()));
    }
}
