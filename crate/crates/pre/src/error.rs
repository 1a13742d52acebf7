use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreError {
    #[error("entropy source failed")]
    Entropy,

    #[error("malformed {0} encoding")]
    Decode(&'static str),

    #[error("capsule failed its self-check")]
    InvalidCapsule,

    #[error("invalid fragment parameters: threshold {threshold}, shares {shares}")]
    Parameters { threshold: usize, shares: usize },

    #[error("plaintext of {size} bytes exceeds the {limit} byte limit")]
    PlaintextTooLarge { size: usize, limit: usize },

    #[error("authenticated decryption failed")]
    Decryption,

    #[error("capsule fragment #{index} failed verification")]
    InvalidFragment { index: usize },

    #[error("{got} distinct capsule fragments supplied, {needed} required")]
    Threshold { needed: usize, got: usize },

    #[error("capsule fragments originate from different re-encryption keys")]
    MixedFragments,

    #[error("re-encrypted capsule is inconsistent with the delegator's public key")]
    Reconstruction,
}

pub type Result<T> = std::result::Result<T, PreError>;
