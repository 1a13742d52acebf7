use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use medshare_auth::Role;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{Account, Client, ClientError};
use crate::fixtures::{fixture, FileSize};
use crate::report::{BenchReport, ScenarioReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Upload,
    AcceptShare,
    RetrieveOwner,
    RetrievePre,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Upload, Scenario::AcceptShare, Scenario::RetrieveOwner, Scenario::RetrievePre];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Upload => "upload",
            Scenario::AcceptShare => "accept_share",
            Scenario::RetrieveOwner => "retrieve_owner",
            Scenario::RetrievePre => "retrieve_pre",
        }
    }

    /// Key-fragment generation does not depend on the file, so acceptance
    /// runs once regardless of the requested sizes.
    pub fn sized(self) -> bool {
        self != Scenario::AcceptShare
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}; expected one of upload, accept_share, retrieve_owner, retrieve_pre"))
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub scenarios: Vec<Scenario>,
    pub sizes: Vec<FileSize>,
    pub runs: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self { scenarios: Scenario::ALL.to_vec(), sizes: FileSize::ALL.to_vec(), runs: 20, warmup: 3, seed: 0x5eed }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<(), String> {
        if self.runs < 2 {
            return Err(format!("runs must be at least 2, got {}", self.runs));
        }
        if self.scenarios.is_empty() {
            return Err("no scenarios selected".into());
        }
        if self.sizes.is_empty() && self.scenarios.iter().any(|s| s.sized()) {
            return Err("no sizes selected".into());
        }
        Ok(())
    }

    /// (scenario, size) jobs in execution order: size-independent scenarios
    /// first, then every sized scenario for one size before moving to the
    /// next, so the owner and proxy retrievals of a size run back to back.
    pub fn jobs(&self) -> Vec<(Scenario, Option<FileSize>)> {
        let mut out: Vec<_> = self.scenarios.iter().filter(|s| !s.sized()).map(|&s| (s, None)).collect();
        for &size in &self.sizes {
            out.extend(self.scenarios.iter().filter(|s| s.sized()).map(|&s| (s, Some(size))));
        }
        out
    }
}

/// The record owner and the practitioner who asks for access.
pub struct Participants {
    pub owner: Account,
    pub requester: Account,
}

const DEFAULT_PASSWORD_PREFIX: &str = "bench-password-";

impl Participants {
    /// Signs in the fixture accounts named by `env` (`MEDSHARE_BENCH_OWNER_*`,
    /// `MEDSHARE_BENCH_REQUESTER_*` with `EMAIL`, `PASSWORD`, `SECRET_KEY`,
    /// `SIGNING_KEY`), registering fresh ones where no override is given. A
    /// trusted entity is registered unless one already exists.
    pub async fn provision(client: &Client, env: impl Fn(&str) -> Option<String>) -> Result<Self, ClientError> {
        let tag = format!("{:x}", rand_core::RngCore::next_u64(&mut rand_core::OsRng));
        let password = format!("{DEFAULT_PASSWORD_PREFIX}{tag}");
        let te_email = env("MEDSHARE_BENCH_TRUSTED_EMAIL").unwrap_or_else(|| "bench-trusted@bench.local".into());
        match client.register("Bench Trusted Entity", &te_email, &password, &[Role::TrustedEntity]).await {
            Ok(_) => {}
            Err(e) if e.status() == Some(StatusCode::CONFLICT) => {}
            Err(e) => return Err(e),
        }
        let owner = Self::account(client, &env, "OWNER", Role::Patient, &tag, &password).await?;
        let requester = Self::account(client, &env, "REQUESTER", Role::Practitioner, &tag, &password).await?;
        Ok(Self { owner, requester })
    }

    async fn account(
        client: &Client,
        env: &impl Fn(&str) -> Option<String>,
        who: &str,
        role: Role,
        tag: &str,
        password: &str,
    ) -> Result<Account, ClientError> {
        let var = |k: &str| env(&format!("MEDSHARE_BENCH_{who}_{k}"));
        match (var("EMAIL"), var("PASSWORD"), var("SECRET_KEY"), var("SIGNING_KEY")) {
            (Some(email), Some(pw), Some(sk), Some(sig)) => client.login_with_encoded_keys(&email, &pw, &sk, &sig).await,
            (email, pw, None, None) => {
                let email = email.unwrap_or_else(|| format!("bench-{}-{tag}@bench.local", who.to_ascii_lowercase()));
                let pw = pw.unwrap_or_else(|| password.to_owned());
                client.register(&format!("Bench {who}"), &email, &pw, &[role]).await
            }
            _ => Err(ClientError::Keys(format!(
                "MEDSHARE_BENCH_{who}_SECRET_KEY and _SIGNING_KEY must be given together with _EMAIL and _PASSWORD"
            ))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{0}")]
    Check(String),
}

struct Harness<'a> {
    client: &'a Client,
    who: &'a Participants,
    plan: &'a BenchPlan,
    /// Per-size uploaded record shared by both retrieval scenarios.
    stored: HashMap<FileSize, (String, [u8; 32])>,
    granted: HashMap<FileSize, String>,
    accept_target: Option<String>,
    uploads: u64,
}

fn digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

impl Harness<'_> {
    fn next_seed(&mut self) -> u64 {
        self.uploads += 1;
        self.plan.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(self.uploads)
    }

    async fn stored(&mut self, size: FileSize) -> Result<(String, [u8; 32]), RunError> {
        if let Some(v) = self.stored.get(&size) {
            return Ok(v.clone());
        }
        let seed = self.next_seed();
        let body = fixture(size.bytes(), seed);
        let hash = digest(&body);
        let rec = self.client.upload(&self.who.owner, &format!("fixture-{size}.pdf"), body).await?;
        self.stored.insert(size, (rec.resource_id.clone(), hash));
        Ok((rec.resource_id, hash))
    }

    async fn granted(&mut self, size: FileSize) -> Result<(String, [u8; 32]), RunError> {
        let (id, hash) = self.stored(size).await?;
        if !self.granted.contains_key(&size) {
            let share = self.client.request_share(&self.who.requester, &id).await?;
            self.client.accept_share(&self.who.owner, &share.share_id, None).await?;
            self.granted.insert(size, share.share_id);
        }
        Ok((id, hash))
    }

    /// Runs one timed iteration and returns elapsed milliseconds.
    async fn iteration(&mut self, scenario: Scenario, size: Option<FileSize>) -> Result<f64, RunError> {
        match (scenario, size) {
            (Scenario::Upload, Some(size)) => {
                let seed = self.next_seed();
                let body = fixture(size.bytes(), seed);
                let name = format!("upload-{seed}.pdf");
                let start = Instant::now();
                let rec = self.client.upload(&self.who.owner, &name, body).await?;
                let ms = elapsed_ms(start);
                if rec.size_bytes != size.bytes() as u64 {
                    return Err(RunError::Check(format!("stored size {} != {}", rec.size_bytes, size.bytes())));
                }
                Ok(ms)
            }
            (Scenario::AcceptShare, _) => {
                let target = match &self.accept_target {
                    Some(t) => t.clone(),
                    None => {
                        let seed = self.next_seed();
                        let rec = self.client.upload(&self.who.owner, "consent.pdf", fixture(1024, seed)).await?;
                        self.accept_target = Some(rec.resource_id.clone());
                        rec.resource_id
                    }
                };
                let share = self.client.request_share(&self.who.requester, &target).await?;
                let expiry = chrono::Utc::now() + chrono::Duration::days(1);
                let start = Instant::now();
                self.client.accept_share(&self.who.owner, &share.share_id, Some(expiry)).await?;
                let ms = elapsed_ms(start);
                // Frees the (resource, requester) slot for the next fresh request.
                self.client.revoke_share(&self.who.owner, &share.share_id).await?;
                Ok(ms)
            }
            (Scenario::RetrieveOwner, Some(size)) => {
                let (id, hash) = self.stored(size).await?;
                let start = Instant::now();
                let got = self.client.retrieve(&self.who.owner, &id).await?;
                let ms = elapsed_ms(start);
                check(&got.bytes, hash, got.via_proxy, false)?;
                Ok(ms)
            }
            (Scenario::RetrievePre, Some(size)) => {
                let (id, hash) = self.granted(size).await?;
                let start = Instant::now();
                let got = self.client.retrieve(&self.who.requester, &id).await?;
                let ms = elapsed_ms(start);
                check(&got.bytes, hash, got.via_proxy, true)?;
                Ok(ms)
            }
            (sc, None) => Err(RunError::Check(format!("{sc} needs a file size"))),
        }
    }
}

fn check(bytes: &[u8], expected: [u8; 32], via_proxy: bool, want_proxy: bool) -> Result<(), RunError> {
    if digest(bytes) != expected {
        return Err(RunError::Check("retrieved bytes differ from the uploaded fixture".into()));
    }
    if via_proxy != want_proxy {
        return Err(RunError::Check(format!("expected via_proxy={want_proxy}, server reported {via_proxy}")));
    }
    Ok(())
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

/// Runs every job of `plan` in order. A failed request stops the run; the
/// report then carries what completed plus a partial marker.
pub async fn run(client: &Client, who: &Participants, plan: &BenchPlan) -> BenchReport {
    let mut report = BenchReport::new(client.base_url(), plan.runs, plan.warmup);
    if let Err(e) = plan.validate() {
        report.partial = Some(e);
        return report;
    }
    let mut h = Harness {
        client,
        who,
        plan,
        stored: HashMap::new(),
        granted: HashMap::new(),
        accept_target: None,
        uploads: 0,
    };
    // Records and grants for the retrieval scenarios are prepared before
    // anything is timed.
    for (scenario, size) in plan.jobs() {
        let prepared = match (scenario, size) {
            (Scenario::RetrieveOwner, Some(size)) => h.stored(size).await.map(drop),
            (Scenario::RetrievePre, Some(size)) => h.granted(size).await.map(drop),
            _ => Ok(()),
        };
        if let Err(e) = prepared {
            report.partial = Some(format!("preparing {scenario} @ {}: {e}", size.map(|s| s.label()).unwrap_or("-")));
            return report;
        }
    }
    for (scenario, size) in plan.jobs() {
        let mut samples = Vec::with_capacity(plan.runs);
        let mut failure = None;
        for i in 0..plan.warmup + plan.runs {
            match h.iteration(scenario, size).await {
                Ok(ms) if i >= plan.warmup => samples.push(ms),
                Ok(_) => {}
                Err(e) => {
                    failure = Some(format!("{scenario}{} run {}: {e}", size.map(|s| format!(" @ {s}")).unwrap_or_default(), i + 1));
                    break;
                }
            }
        }
        if let Some(s) = ScenarioReport::new(scenario, size, samples) {
            report.scenarios.push(s);
        }
        if failure.is_some() {
            report.partial = failure;
            break;
        }
    }
    report.finish();
    report
}
