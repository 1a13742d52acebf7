//! HTTP client for the platform plus the timing harness built on it.

pub mod client;
pub mod fixtures;
pub mod report;
pub mod scenario;
pub mod stats;

pub use client::{Account, Client, ClientError};
pub use fixtures::{fixture, FileSize};
pub use report::{BenchReport, Format, ScenarioReport};
pub use scenario::{run, BenchPlan, Participants, Scenario};
pub use stats::Stats;
