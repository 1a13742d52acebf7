//! Wires the services together. The platform listener serves the
//! authorization and resource APIs; the proxy runs on its own listener and
//! is reached over HTTP, as in deployment.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use axum::Router;
use medshare_auth::{AuthConfig, AuthService, PasswordPolicy, TokenCodec};
use medshare_proxy::ProxyService;
use medshare_resource::{spawn_sweeper, HttpProxyClient, ResourceConfig, ResourceService};
use medshare_storage::{
    BlobStore, DocumentStore, FileBlobStore, FileDocumentStore, FileTtlStore, MemoryBlobStore, MemoryDocumentStore,
    MemoryTtlStore, SharedClock, SystemClock, TtlStore,
};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// Where each service keeps its state. `None` means in memory.
#[derive(Debug, Clone, Default)]
pub struct Persistence {
    pub data_dir: Option<PathBuf>,
}

pub struct PlatformStores {
    pub documents: Arc<dyn DocumentStore>,
    pub families: Arc<dyn TtlStore>,
    pub blobs: Arc<dyn BlobStore>,
}

impl Persistence {
    pub fn platform(&self, clock: SharedClock) -> anyhow::Result<PlatformStores> {
        Ok(match &self.data_dir {
            None => PlatformStores {
                documents: Arc::new(MemoryDocumentStore::new()),
                families: Arc::new(MemoryTtlStore::new(clock)),
                blobs: Arc::new(MemoryBlobStore::new()),
            },
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                PlatformStores {
                    documents: Arc::new(FileDocumentStore::open(dir.join("platform.journal"))?),
                    families: Arc::new(FileTtlStore::open(dir.join("refresh.journal"), clock)?),
                    blobs: Arc::new(FileBlobStore::open(dir.join("blobs"))?),
                }
            }
        })
    }

    pub fn proxy(&self) -> anyhow::Result<Arc<dyn DocumentStore>> {
        Ok(match &self.data_dir {
            None => Arc::new(MemoryDocumentStore::new()),
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Arc::new(FileDocumentStore::open(dir.join("proxy.journal"))?)
            }
        })
    }
}

#[derive(Clone)]
pub struct StackOptions {
    pub jwt_secret: Vec<u8>,
    pub persistence: Persistence,
    pub clock: SharedClock,
    pub password: PasswordPolicy,
    pub resource: ResourceConfig,
    /// Run the periodic expiry sweep.
    pub sweeper: bool,
}

impl StackOptions {
    pub fn new(jwt_secret: impl Into<Vec<u8>>) -> Self {
        Self {
            jwt_secret: jwt_secret.into(),
            persistence: Persistence::default(),
            clock: Arc::new(SystemClock),
            password: PasswordPolicy::default(),
            resource: ResourceConfig::default(),
            sweeper: true,
        }
    }
}

pub struct Platform {
    pub auth: Arc<AuthService>,
    pub resource: Arc<ResourceService>,
    pub router: Router,
}

pub fn build_platform(opts: &StackOptions, proxy_url: &str) -> anyhow::Result<Platform> {
    let stores = opts.persistence.platform(opts.clock.clone())?;
    let auth = Arc::new(AuthService::new(
        AuthConfig::new(opts.jwt_secret.clone()).with_password_policy(opts.password),
        stores.documents.clone(),
        stores.families,
        opts.clock.clone(),
    ));
    let codec = TokenCodec::new(&opts.jwt_secret, opts.clock.clone());
    let proxy = Arc::new(HttpProxyClient::new(proxy_url, codec.clone()));
    let resource = Arc::new(ResourceService::new(
        opts.resource.clone(),
        stores.documents,
        stores.blobs,
        proxy,
        opts.clock.clone(),
    ));
    let router = medshare_auth::http::router(auth.clone()).merge(medshare_resource::http::router(resource.clone(), codec));
    Ok(Platform { auth, resource, router })
}

pub struct ProxyNode {
    pub service: Arc<ProxyService>,
    pub router: Router,
}

pub fn build_proxy(opts: &StackOptions) -> anyhow::Result<ProxyNode> {
    let service = Arc::new(ProxyService::new(opts.persistence.proxy()?, opts.clock.clone()));
    let router = medshare_proxy::http::router(service.clone(), TokenCodec::new(&opts.jwt_secret, opts.clock.clone()));
    Ok(ProxyNode { service, router })
}

/// A listener serving `router` until the handle is shut down or dropped.
pub struct Served {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl Served {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        if let Some(task) = self.task.take() {
            task.abort();
        }
    }
}

pub async fn serve(router: Router, addr: SocketAddr) -> anyhow::Result<Served> {
    let listener = TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    let addr = listener.local_addr()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let shutdown = async {
            let _ = stopped.await;
        };
        if let Err(e) = axum::serve(listener, router).tcp_nodelay(true).with_graceful_shutdown(shutdown).await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok(Served { addr, stop: Some(stop), task: Some(task) })
}

/// Platform and proxy on ephemeral loopback ports.
pub struct LocalStack {
    pub platform: Served,
    pub proxy: Served,
    pub auth: Arc<AuthService>,
    pub resource: Arc<ResourceService>,
    pub proxy_service: Arc<ProxyService>,
    sweeper: Option<AbortOnDrop>,
}

struct AbortOnDrop(JoinHandle<()>);

impl Drop for AbortOnDrop {
    fn drop(&mut self) {
        self.0.abort();
    }
}

impl LocalStack {
    pub async fn start(opts: StackOptions) -> anyhow::Result<Self> {
        let loopback: SocketAddr = ([127, 0, 0, 1], 0).into();
        let proxy_node = build_proxy(&opts)?;
        let proxy = serve(proxy_node.router, loopback).await?;
        let platform = build_platform(&opts, &proxy.url())?;
        let sweeper = opts.sweeper.then(|| AbortOnDrop(spawn_sweeper(platform.resource.clone())));
        let served = serve(platform.router, loopback).await?;
        Ok(Self {
            platform: served,
            proxy,
            auth: platform.auth,
            resource: platform.resource,
            proxy_service: proxy_node.service,
            sweeper,
        })
    }

    pub fn base_url(&self) -> String {
        self.platform.url()
    }

    pub async fn shutdown(self) {
        let LocalStack { platform, proxy, sweeper, .. } = self;
        drop(sweeper);
        platform.shutdown().await;
        proxy.shutdown().await;
    }
}

pub fn data_dir_arg(dir: Option<&Path>) -> Persistence {
    Persistence { data_dir: dir.map(Path::to_owned) }
}
