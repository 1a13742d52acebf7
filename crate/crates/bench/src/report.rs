use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::fixtures::FileSize;
use crate::scenario::Scenario;
use crate::stats::Stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}; expected table, json or csv")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReportError {
    #[error("report has no measurements")]
    Empty,
    #[error("derived value mismatch: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub size: Option<FileSize>,
    pub file_size_bytes: Option<usize>,
    pub samples_ms: Vec<f64>,
    pub stats: Stats,
}

impl ScenarioReport {
    /// `None` when fewer than two samples were collected.
    pub fn new(scenario: Scenario, size: Option<FileSize>, samples_ms: Vec<f64>) -> Option<Self> {
        let stats = Stats::from_samples(&samples_ms)?;
        Some(Self { scenario, size, file_size_bytes: size.map(FileSize::bytes), samples_ms, stats })
    }

    pub fn runs(&self) -> usize {
        self.samples_ms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub size: FileSize,
    pub owner_mean_ms: f64,
    pub pre_mean_ms: f64,
    pub overhead_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub generated_at: DateTime<Utc>,
    pub base_url: String,
    pub runs: usize,
    pub warmup: usize,
    pub scenarios: Vec<ScenarioReport>,
    pub pre_overhead: Vec<Overhead>,
    /// Set when a scenario failed; the report holds only what completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<String>,
}

/// Published means (and the one published deviation) from the original
/// measurements on a shared cloud tier. Reference only.
pub fn published_reference(scenario: Scenario, size: Option<FileSize>) -> Option<(f64, Option<f64>)> {
    use FileSize::*;
    use Scenario::*;
    match (scenario, size) {
        (Upload, Some(OneMiB)) => Some((1154.0, None)),
        (Upload, Some(TenMiB)) => Some((3870.0, None)),
        (AcceptShare, _) => Some((869.0, Some(188.0))),
        (RetrieveOwner, Some(OneMiB)) => Some((903.0, None)),
        (RetrieveOwner, Some(TenMiB)) => Some((2529.0, None)),
        (RetrievePre, Some(OneMiB)) => Some((1245.0, None)),
        (RetrievePre, Some(TenMiB)) => Some((2877.0, None)),
        _ => None,
    }
}

pub fn published_overhead(size: FileSize) -> f64 {
    match size {
        FileSize::OneMiB => 342.0,
        FileSize::TenMiB => 348.0,
    }
}

impl BenchReport {
    pub fn new(base_url: &str, runs: usize, warmup: usize) -> Self {
        Self {
            generated_at: Utc::now(),
            base_url: base_url.to_owned(),
            runs,
            warmup,
            scenarios: Vec::new(),
            pre_overhead: Vec::new(),
            partial: None,
        }
    }

    pub fn scenario(&self, scenario: Scenario, size: Option<FileSize>) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.scenario == scenario && s.size == size)
    }

    pub fn overhead(&self, size: FileSize) -> Option<f64> {
        self.pre_overhead.iter().find(|o| o.size == size).map(|o| o.overhead_ms)
    }

    /// Recomputes the per-size overheads from the scenario means.
    pub fn finish(&mut self) {
        self.pre_overhead = FileSize::ALL
            .into_iter()
            .filter_map(|size| {
                let owner = self.scenario(Scenario::RetrieveOwner, Some(size))?.stats.mean;
                let pre = self.scenario(Scenario::RetrievePre, Some(size))?.stats.mean;
                Some(Overhead { size, owner_mean_ms: owner, pre_mean_ms: pre, overhead_ms: pre - owner })
            })
            .collect();
    }

    /// Checks that every derived number follows from the raw samples.
    pub fn verify(&self) -> Result<(), ReportError> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12);
        for s in &self.scenarios {
            let fresh = Stats::from_samples(&s.samples_ms)
                .ok_or_else(|| ReportError::Inconsistent(format!("{} has fewer than two samples", s.scenario)))?;
            let pairs = [("mean", fresh.mean, s.stats.mean), ("stddev", fresh.stddev, s.stats.stddev), ("min", fresh.min, s.stats.min), ("max", fresh.max, s.stats.max)];
            for (what, want, got) in pairs {
                if !close(want, got) {
                    return Err(ReportError::Inconsistent(format!("{} {what}: {got} != {want}", s.scenario)));
                }
            }
        }
        let mut again = self.clone();
        again.finish();
        if again.pre_overhead.len() != self.pre_overhead.len()
            || again.pre_overhead.iter().zip(&self.pre_overhead).any(|(a, b)| a.size != b.size || !close(a.overhead_ms, b.overhead_ms))
        {
            return Err(ReportError::Inconsistent("pre_overhead".into()));
        }
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<String, ReportError> {
        if self.scenarios.is_empty() {
            return Err(ReportError::Empty);
        }
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            Format::Csv => self.csv(),
            Format::Table => self.table(),
        })
    }

    fn csv(&self) -> String {
        let mut out = String::from("kind,scenario,size,runs,mean_ms,stddev_ms,min_ms,max_ms,published_mean_ms,published_stddev_ms\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.scenarios {
            let published = published_reference(s.scenario, s.size);
            let _ = writeln!(
                out,
                "scenario,{},{},{},{},{},{},{},{},{}",
                s.scenario,
                s.size.map(|z| z.label()).unwrap_or(""),
                s.runs(),
                s.stats.mean,
                s.stats.stddev,
                s.stats.min,
                s.stats.max,
                opt(published.map(|p| p.0)),
                opt(published.and_then(|p| p.1)),
            );
        }
        for o in &self.pre_overhead {
            let _ = writeln!(out, "pre_overhead,,{},,{},,,,{},", o.size, o.overhead_ms, published_overhead(o.size));
        }
        if let Some(p) = &self.partial {
            let _ = writeln!(out, "# PARTIAL: {p}");
        }
        out
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>5} {:>10} {:>10} {:>10} {:>10} {:>16}",
            "scenario", "size", "runs", "mean ms", "stddev ms", "min ms", "max ms", "published ms"
        );
        for s in &self.scenarios {
            let published = match published_reference(s.scenario, s.size) {
                Some((m, Some(sd))) => format!("{m:.0} ± {sd:.0}"),
                Some((m, None)) => format!("{m:.0}"),
                None => "-".into(),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>5} {:>5} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>16}",
                s.scenario.name(),
                s.size.map(|z| z.label()).unwrap_or("-"),
                s.runs(),
                s.stats.mean,
                s.stats.stddev,
                s.stats.min,
                s.stats.max,
                published
            );
        }
        if !self.pre_overhead.is_empty() {
            let _ = writeln!(out, "\n{:<16} {:>5} {:>10} {:>16}", "pre overhead", "size", "ms", "published ms");
            for o in &self.pre_overhead {
                let _ = writeln!(out, "{:<16} {:>5} {:>10.2} {:>16.0}", "", o.size.label(), o.overhead_ms, published_overhead(o.size));
            }
        }
        if let Some(p) = &self.partial {
            let _ = writeln!(out, "\nPARTIAL REPORT: {p}");
        }
        out
    }
}
