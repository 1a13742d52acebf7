//! Threshold proxy re-encryption for opaque record payloads.
//!
//! A record is sealed with a symmetric key obtained from [`encapsulate`];
//! only the resulting [`Capsule`] is ever transformed. The owner splits a
//! re-encryption key into [`KeyFragment`]s with [`generate_kfrags`] using
//! nothing but the delegatee's public key. A proxy applies each fragment to
//! the capsule with [`reencapsulate`], producing [`CapsuleFragment`]s that
//! anyone holding the owner's public and verifying keys can check. The
//! delegatee combines a threshold of them with [`decapsulate_reencrypted`]
//! to rederive the original key.
//!
//! Group: secp256k1. KDF: HKDF-SHA256 over the compressed shared point.
//! DEM: ChaCha20-Poly1305 with the serialized capsule as associated data.
//! Signatures: deterministic ECDSA (RFC 6979) over secp256k1.
//!
//! All encodings are fixed width, big-endian, with SEC1-compressed points:
//!
//! | object            | bytes | layout |
//! |-------------------|-------|--------|
//! | `PublicKey`       | 33    | compressed point |
//! | `VerifyingKey`    | 33    | compressed point |
//! | `SecretKey`       | 32    | scalar |
//! | `Capsule`         | 98    | `E ‖ V ‖ s` |
//! | `KeyFragment`     | 196   | `id ‖ t:u16 ‖ rk ‖ precursor ‖ U·rk ‖ sig` |
//! | `CapsuleFragment` | 361   | `E1 ‖ V1 ‖ id ‖ t:u16 ‖ precursor ‖ E2 ‖ V2 ‖ U·rk ‖ U2 ‖ z ‖ sig` |

mod capsule;
mod cfrag;
mod curve;
mod dem;
mod error;
mod keys;
mod kfrag;

pub use capsule::{decapsulate_original, encapsulate, Capsule, CAPSULE_SIZE};
pub use cfrag::{
    decapsulate_reencrypted, reencapsulate, verify_cfrag, CapsuleFragment, CorrectnessProof,
    CFRAG_SIZE,
};
pub use curve::{POINT_SIZE, SCALAR_SIZE};
pub use dem::{
    dem_decrypt, dem_decrypt_owned, dem_encrypt, dem_encrypt_with_limit, Ciphertext, SymmetricKey,
    DEFAULT_MAX_PLAINTEXT, KEY_SIZE, NONCE_SIZE, TAG_SIZE,
};
pub use error::{PreError, Result};
pub use keys::{
    generate_keypair, generate_signing_keypair, KeyPair, PublicKey, SecretKey, Signature,
    SigningKey, SigningKeyPair, VerifyingKey, SIGNATURE_SIZE,
};
pub use kfrag::{generate_kfrags, verify_kfrag, KeyFragment, KFRAG_SIZE};

/// Delegation parameters used when a caller does not choose any.
pub const DEFAULT_THRESHOLD: usize = 1;
pub const DEFAULT_SHARES: usize = 1;
