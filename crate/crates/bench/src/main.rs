use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use medshare_bench::report::Format;
use medshare_bench::{run, BenchPlan, BenchReport, Client, FileSize, Participants, Scenario};
use medshare_server::{LocalStack, StackOptions};
use rand_core::RngCore;

#[derive(Parser)]
#[command(name = "bench", about = "End-to-end latency benchmarks for the sharing platform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time scenarios against a running platform, or an in-process stack.
    Run {
        /// upload, accept_share, retrieve_owner, retrieve_pre or all; repeatable.
        #[arg(long = "scenario", default_value = "all")]
        scenarios: Vec<String>,
        /// 1m or 10m; repeatable. Defaults to both.
        #[arg(long = "size")]
        sizes: Vec<FileSize>,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// Untimed iterations before measuring each scenario.
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Platform URL. Without it an in-memory stack is started locally.
        #[arg(long, env = "MEDSHARE_BENCH_BASE_URL")]
        base_url: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Re-render a saved JSON report.
    Render {
        input: PathBuf,
        #[arg(long, default_value = "table")]
        format: Format,
    },
}

fn scenarios(names: &[String]) -> anyhow::Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for name in names {
        let picked = if name == "all" { Scenario::ALL.to_vec() } else { vec![name.parse().map_err(anyhow::Error::msg)?] };
        for s in picked {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn emit(report: &BenchReport, format: Format, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let text = report.render(format)?;
    match out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            if format != Format::Table {
                print!("{}", report.render(Format::Table)?);
            } else {
                print!("{text}");
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

async fn bench(plan: BenchPlan, base_url: Option<String>, out: Option<PathBuf>, format: Format) -> anyhow::Result<bool> {
    plan.validate().map_err(anyhow::Error::msg)?;
    let stack = match base_url {
        Some(_) => None,
        None => {
            let mut secret = [0u8; 32];
            rand_core::OsRng.fill_bytes(&mut secret);
            Some(LocalStack::start(StackOptions::new(secret.to_vec())).await?)
        }
    };
    let url = base_url.unwrap_or_else(|| stack.as_ref().expect("stack started").base_url());
    let client = Client::new(&url)?;
    let who = Participants::provision(&client, |k| std::env::var(k).ok()).await.context("provisioning fixture accounts")?;
    let report = run(&client, &who, &plan).await;
    let ok = report.partial.is_none();
    if let Err(e) = emit(&report, format, out.as_ref()) {
        eprintln!("bench: {e:#}");
        if let Some(p) = &report.partial {
            eprintln!("PARTIAL REPORT: {p}");
        }
        return Ok(false);
    }
    if let Some(stack) = stack {
        stack.shutdown().await;
    }
    Ok(ok)
}

#[tokio::main]
async fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run { scenarios: names, sizes, runs, warmup, seed, base_url, out, format } => match scenarios(&names) {
            Ok(scenarios) => {
                let sizes = if sizes.is_empty() { FileSize::ALL.to_vec() } else { sizes };
                let plan = BenchPlan { scenarios, sizes, runs, warmup, seed };
                bench(plan, base_url, out, format).await
            }
            Err(e) => Err(e),
        },
        Command::Render { input, format } => (|| {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let report: BenchReport = serde_json::from_str(&text)?;
            report.verify()?;
            print!("{}", report.render(format)?);
            Ok(report.partial.is_none())
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("bench: {e:#}");
            ExitCode::from(2)
        }
    }
}
