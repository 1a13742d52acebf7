#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use medshare_auth::{AuthConfig, AuthService, PasswordPolicy, Registration, Role};
use medshare_storage::{ManualClock, MemoryDocumentStore, MemoryTtlStore};

pub const PASSWORD: &str = "a long enough password";

pub fn service() -> (Arc<AuthService>, ManualClock) {
    let clock = ManualClock::starting_now();
    let shared: medshare_storage::SharedClock = Arc::new(clock.clone());
    let svc = AuthService::new(
        AuthConfig::new(b"integration-secret".to_vec()).with_password_policy(PasswordPolicy::fast()),
        Arc::new(MemoryDocumentStore::new()),
        Arc::new(MemoryTtlStore::new(shared.clone())),
        shared,
    );
    (Arc::new(svc), clock)
}

pub fn registration(email: &str, roles: &[Role]) -> Registration {
    let mut rng = rand::thread_rng();
    let kp = medshare_pre::generate_keypair(&mut rng).unwrap();
    let sk = medshare_pre::generate_signing_keypair(&mut rng).unwrap();
    Registration {
        name: "Test User".into(),
        email: email.into(),
        password: PASSWORD.into(),
        public_key: B64.encode(kp.public().to_bytes()),
        verifying_key: B64.encode(sk.verifying().to_bytes()),
        roles: roles.iter().copied().collect::<BTreeSet<_>>(),
    }
}
