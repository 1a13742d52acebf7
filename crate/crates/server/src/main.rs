use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use medshare_resource::spawn_sweeper;
use medshare_server::{build_platform, build_proxy, data_dir_arg, serve, StackOptions};

#[derive(Parser)]
#[command(name = "medshare-server", about = "EHR sharing platform services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// HMAC key shared by every service for signing and verifying tokens.
    #[arg(long, env = "MEDSHARE_JWT_SECRET")]
    jwt_secret: String,
    /// Directory for durable state; in-memory when omitted.
    #[arg(long, env = "MEDSHARE_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Expiry sweep period in seconds.
    #[arg(long, default_value_t = 60)]
    sweep_secs: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Authorization and resource APIs on one listener.
    Platform {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "MEDSHARE_PROXY_URL", default_value = "http://127.0.0.1:8081")]
        proxy_url: String,
    },
    /// Re-encryption proxy.
    Proxy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8081")]
        listen: SocketAddr,
    },
    /// Both, in one process.
    All {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:8081")]
        proxy_listen: SocketAddr,
    },
}

fn options(common: &Common, sub: &str) -> StackOptions {
    let mut opts = StackOptions::new(common.jwt_secret.clone().into_bytes());
    opts.persistence = data_dir_arg(common.data_dir.as_ref().map(|d| d.join(sub)).as_deref());
    opts.resource.sweep_interval = std::time::Duration::from_secs(common.sweep_secs.max(1));
    opts
}

async fn wait_for_ctrl_c() {
    let _ = tokio::signal::ctrl_c().await;
    tracing::info!("shutting down");
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();

    match Cli::parse().command {
        Command::Platform { common, listen, proxy_url } => {
            let opts = options(&common, "platform");
            let platform = build_platform(&opts, &proxy_url)?;
            let _sweeper = spawn_sweeper(platform.resource.clone());
            let served = serve(platform.router, listen).await?;
            tracing::info!(url = %served.url(), proxy = %proxy_url, "platform listening");
            wait_for_ctrl_c().await;
            served.shutdown().await;
        }
        Command::Proxy { common, listen } => {
            let node = build_proxy(&options(&common, "proxy"))?;
            let served = serve(node.router, listen).await?;
            tracing::info!(url = %served.url(), "proxy listening");
            wait_for_ctrl_c().await;
            served.shutdown().await;
        }
        Command::All { common, listen, proxy_listen } => {
            let proxy = serve(build_proxy(&options(&common, "proxy"))?.router, proxy_listen)
                .await
                .context("starting proxy")?;
            let platform = build_platform(&options(&common, "platform"), &proxy.url())?;
            let _sweeper = spawn_sweeper(platform.resource.clone());
            let served = serve(platform.router, listen).await.context("starting platform")?;
            tracing::info!(platform = %served.url(), proxy = %proxy.url(), "listening");
            wait_for_ctrl_c().await;
            served.shutdown().await;
            proxy.shutdown().await;
        }
    }
    Ok(())
}
