use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum FileSize {
    #[serde(rename = "1m")]
    OneMiB,
    #[serde(rename = "10m")]
    TenMiB,
}

impl FileSize {
    pub const ALL: [FileSize; 2] = [FileSize::OneMiB, FileSize::TenMiB];

    pub fn bytes(self) -> usize {
        match self {
            FileSize::OneMiB => 1_048_576,
            FileSize::TenMiB => 10_485_760,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FileSize::OneMiB => "1m",
            FileSize::TenMiB => "10m",
        }
    }
}

impl fmt::Display for FileSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FileSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1m" | "1mb" | "1mib" => Ok(FileSize::OneMiB),
            "10m" | "10mb" | "10mib" => Ok(FileSize::TenMiB),
            other => Err(format!("unknown size {other:?}; expected 1m or 10m")),
        }
    }
}

/// Deterministic pseudo-random content; same (len, seed) gives the same bytes.
pub fn fixture(len: usize, seed: u64) -> Vec<u8> {
    let mut out = vec![0u8; len];
    ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut out);
    out
}
