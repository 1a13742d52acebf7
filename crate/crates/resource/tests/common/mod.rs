#![allow(dead_code)]

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use medshare_auth::{AuthConfig, AuthService, PasswordPolicy, Registration, Role, UserAccount};
use medshare_pre::{generate_keypair, generate_signing_keypair, Capsule, CapsuleFragment, KeyFragment, KeyPair, SigningKeyPair};
use medshare_proxy::ProxyService;
use medshare_resource::{
    Caller, InProcessProxy, OwnerKeys, ProxyCallError, ProxyClient, ResourceConfig, ResourceService,
};
use medshare_storage::{BlobStore, DocumentStore, ManualClock, MemoryBlobStore, MemoryDocumentStore, MemoryTtlStore, SharedClock};
use rand::rngs::OsRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tamper {
    FlipFirstCfrag,
    DropAllButOne,
}

/// Wraps the in-process proxy, counting calls and injecting faults.
pub struct TestProxy {
    pub inner: InProcessProxy,
    pub stores: AtomicUsize,
    pub reencapsulations: AtomicUsize,
    pub deletes: AtomicUsize,
    pub down: AtomicBool,
    pub tamper: Mutex<Option<Tamper>>,
}

impl TestProxy {
    pub fn reencapsulations(&self) -> usize {
        self.reencapsulations.load(Ordering::SeqCst)
    }

    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }

    fn check_up(&self) -> Result<(), ProxyCallError> {
        if self.down.load(Ordering::SeqCst) {
            Err(ProxyCallError::Unavailable("connection refused".into()))
        } else {
            Ok(())
        }
    }
}

#[async_trait]
impl ProxyClient for TestProxy {
    async fn store_kfrags(&self, id: &str, k: &[KeyFragment], t: u16, n: u16) -> Result<(), ProxyCallError> {
        self.check_up()?;
        self.stores.fetch_add(1, Ordering::SeqCst);
        self.inner.store_kfrags(id, k, t, n).await
    }

    async fn reencapsulate(&self, id: &str, capsule: &Capsule) -> Result<Vec<CapsuleFragment>, ProxyCallError> {
        self.check_up()?;
        let mut cfrags = self.inner.reencapsulate(id, capsule).await?;
        self.reencapsulations.fetch_add(1, Ordering::SeqCst);
        match *self.tamper.lock().unwrap() {
            Some(Tamper::FlipFirstCfrag) => {
                let mut bytes = cfrags[0].to_bytes();
                // Flip inside the proof response scalar so the encoding stays valid.
                let i = bytes.len() - 70;
                bytes[i] ^= 1;
                cfrags[0] = CapsuleFragment::from_bytes(&bytes).unwrap();
            }
            Some(Tamper::DropAllButOne) => cfrags.truncate(1),
            None => {}
        }
        Ok(cfrags)
    }

    async fn delete_kfrags(&self, id: &str) -> Result<(), ProxyCallError> {
        self.check_up()?;
        self.deletes.fetch_add(1, Ordering::SeqCst);
        self.inner.delete_kfrags(id).await
    }
}

pub struct User {
    pub account: UserAccount,
    pub keys: KeyPair,
    pub signer: SigningKeyPair,
}

impl User {
    pub fn caller(&self) -> Caller {
        Caller::new(self.account.user_id.clone(), self.account.roles.iter().copied())
    }

    pub fn owner_keys(&self) -> OwnerKeys {
        OwnerKeys { secret: self.keys.secret().clone(), signing: self.signer.signing().clone() }
    }

    pub fn id(&self) -> &str {
        &self.account.user_id
    }
}

pub struct World {
    pub docs: Arc<dyn DocumentStore>,
    pub blobs: Arc<dyn BlobStore>,
    pub clock: ManualClock,
    pub auth: Arc<AuthService>,
    pub proxy_service: Arc<ProxyService>,
    pub proxy: Arc<TestProxy>,
    pub svc: Arc<ResourceService>,
    counter: AtomicUsize,
}

pub fn world() -> World {
    world_with(ResourceConfig::default())
}

pub fn world_with(config: ResourceConfig) -> World {
    let clock = ManualClock::starting_now();
    let shared: SharedClock = Arc::new(clock.clone());
    let docs: Arc<dyn DocumentStore> = Arc::new(MemoryDocumentStore::new());
    let blobs: Arc<dyn BlobStore> = Arc::new(MemoryBlobStore::new());
    let auth = Arc::new(AuthService::new(
        AuthConfig::new(b"resource-tests".to_vec()).with_password_policy(PasswordPolicy::fast()),
        docs.clone(),
        Arc::new(MemoryTtlStore::new(shared.clone())),
        shared.clone(),
    ));
    // The proxy keeps its own store, as it would in deployment.
    let proxy_service = Arc::new(ProxyService::new(Arc::new(MemoryDocumentStore::new()), shared.clone()));
    let proxy = Arc::new(TestProxy {
        inner: InProcessProxy(proxy_service.clone()),
        stores: AtomicUsize::new(0),
        reencapsulations: AtomicUsize::new(0),
        deletes: AtomicUsize::new(0),
        down: AtomicBool::new(false),
        tamper: Mutex::new(None),
    });
    let svc = Arc::new(ResourceService::new(config, docs.clone(), blobs.clone(), proxy.clone(), shared));
    World { docs, blobs, clock, auth, proxy_service, proxy, svc, counter: AtomicUsize::new(0) }
}

impl World {
    pub fn user(&self, roles: &[Role]) -> User {
        let keys = generate_keypair(&mut OsRng).unwrap();
        let signer = generate_signing_keypair(&mut OsRng).unwrap();
        let n = self.counter.fetch_add(1, Ordering::SeqCst);
        let account = self
            .auth
            .register(Registration {
                name: format!("User {n}"),
                email: format!("user{n}@example.org"),
                password: "a long enough password".into(),
                public_key: B64.encode(keys.public().to_bytes()),
                verifying_key: B64.encode(signer.verifying().to_bytes()),
                roles: roles.iter().copied().collect(),
            })
            .unwrap();
        User { account, keys, signer }
    }

    /// Owner patient, practitioner and the trusted entity.
    pub fn cast(&self) -> (User, User, User) {
        let te = self.user(&[Role::TrustedEntity]);
        (self.user(&[Role::Patient]), self.user(&[Role::Practitioner]), te)
    }

    pub async fn upload(&self, owner: &User, bytes: Vec<u8>) -> medshare_resource::EhrRecord {
        self.svc.upload_ehr(&owner.caller(), &owner.owner_keys(), "scan.pdf", None, bytes).await.unwrap()
    }
}

pub fn fixture(len: usize, seed: u64) -> Vec<u8> {
    use rand::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}
