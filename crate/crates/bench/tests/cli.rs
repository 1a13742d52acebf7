use std::process::Command;

use medshare_bench::report::Format;
use medshare_bench::{run, BenchPlan, BenchReport, Client, FileSize, Participants, Scenario, ScenarioReport};
use medshare_server::{LocalStack, StackOptions};

fn bench() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bench"));
    cmd.env_remove("MEDSHARE_BENCH_BASE_URL");
    cmd
}

#[tokio::test(flavor = "multi_thread")]
async fn short_plan_against_local_stack() {
    let stack = LocalStack::start(StackOptions::new(b"bench-test-secret".to_vec())).await.unwrap();
    let client = Client::new(&stack.base_url()).unwrap();
    let who = Participants::provision(&client, |_| None).await.unwrap();
    // A second provisioning finds the trusted entity already registered.
    Participants::provision(&client, |_| None).await.unwrap();
    let plan = BenchPlan {
        scenarios: Scenario::ALL.to_vec(),
        sizes: vec![FileSize::OneMiB],
        runs: 2,
        warmup: 0,
        seed: 1,
    };
    let report = run(&client, &who, &plan).await;
    assert_eq!(report.partial, None);
    assert_eq!(report.scenarios.len(), 4);
    assert!(report.scenarios.iter().all(|s| s.samples_ms.len() == 2 && s.stats.min > 0.0));
    assert!(report.overhead(FileSize::OneMiB).is_some());
    report.verify().unwrap();
    stack.shutdown().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn provisioning_fails_without_platform() {
    let client = Client::new("http://127.0.0.1:9").unwrap();
    assert!(Participants::provision(&client, |_| None).await.is_err());
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_plan_yields_partial_report() {
    let client = Client::new("http://127.0.0.1:9").unwrap();
    let stack = LocalStack::start(StackOptions::new(b"s".to_vec())).await.unwrap();
    let real = Client::new(&stack.base_url()).unwrap();
    let who = Participants::provision(&real, |_| None).await.unwrap();
    let report = run(&client, &who, &BenchPlan { runs: 1, ..BenchPlan::default() }).await;
    assert!(report.partial.unwrap().contains("at least 2"));
    assert!(report.scenarios.is_empty());
}

#[test]
fn render_reverifies_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = BenchReport::new("http://x", 2, 0);
    r.scenarios.push(ScenarioReport::new(Scenario::RetrieveOwner, Some(FileSize::OneMiB), vec![1.0, 3.0]).unwrap());
    r.scenarios.push(ScenarioReport::new(Scenario::RetrievePre, Some(FileSize::OneMiB), vec![4.0, 6.0]).unwrap());
    r.finish();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r.render(Format::Json).unwrap()).unwrap();
    let out = bench().args(["render", good.to_str().unwrap(), "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pre_overhead,,1m,,3,,,,342,"));

    r.pre_overhead[0].overhead_ms = 99.0;
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&r).unwrap()).unwrap();
    let out = bench().args(["render", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("derived value mismatch"));

    r.finish();
    r.partial = Some("stopped".into());
    let partial = dir.path().join("partial.json");
    std::fs::write(&partial, serde_json::to_string(&r).unwrap()).unwrap();
    let out = bench().args(["render", partial.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PARTIAL REPORT: stopped"));
}

#[test]
fn bad_arguments_exit_with_error() {
    let out = bench().args(["run", "--runs", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 2"));
    let out = bench().args(["run", "--scenario", "download"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bench().args(["run", "--size", "5m"]).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn run_against_unreachable_url_is_an_error() {
    let out = bench()
        .args(["run", "--base-url", "http://127.0.0.1:9", "--scenario", "accept_share", "--runs", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("provisioning"));
}

#[test]
fn in_process_run_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bench()
        .args(["run", "--scenario", "accept_share", "--scenario", "all", "--size", "1m", "--runs", "2", "--warmup", "0"])
        .args(["--format", "json", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: BenchReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    report.verify().unwrap();
    assert_eq!(report.scenarios.len(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean ms"));
}
