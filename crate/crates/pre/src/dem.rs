//! Data encapsulation: ChaCha20-Poly1305 keyed by the KEM output, with the
//! serialized capsule bound as associated data.

use std::fmt;

use chacha20poly1305::aead::{Aead, AeadInPlace, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use k256::ProjectivePoint;
use rand_core::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::capsule::Capsule;
use crate::curve::point_to_bytes;
use crate::error::{PreError, Result};

pub const KEY_SIZE: usize = 32;
pub const NONCE_SIZE: usize = 12;
pub const TAG_SIZE: usize = 16;

/// Default ceiling on a single sealed payload (50 MiB).
pub const DEFAULT_MAX_PLAINTEXT: usize = 50 * 1024 * 1024;

const KDF_INFO: &[u8] = b"medshare-pre/v1/dem-key";

#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; KEY_SIZE]);

impl SymmetricKey {
    pub(crate) fn derive(shared_point: &ProjectivePoint) -> Self {
        let ikm = point_to_bytes(shared_point);
        let mut out = [0u8; KEY_SIZE];
        Hkdf::<Sha256>::new(None, &ikm)
            .expand(KDF_INFO, &mut out)
            .expect("32 bytes is a valid HKDF-SHA256 output length");
        Self(out)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_SIZE] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Ciphertext {
    nonce: [u8; NONCE_SIZE],
    body: Vec<u8>,
    associated_data: Vec<u8>,
}

impl Ciphertext {
    /// Reassembles a ciphertext from stored parts, binding `capsule` as the
    /// associated data.
    pub fn from_parts(nonce: [u8; NONCE_SIZE], body: Vec<u8>, capsule: &Capsule) -> Self {
        Self { nonce, body, associated_data: capsule.to_bytes().to_vec() }
    }

    pub fn nonce(&self) -> &[u8; NONCE_SIZE] {
        &self.nonce
    }

    /// Sealed bytes including the 16-byte authentication tag.
    pub fn body(&self) -> &[u8] {
        &self.body
    }

    pub fn into_body(self) -> Vec<u8> {
        self.body
    }

    pub fn associated_data(&self) -> &[u8] {
        &self.associated_data
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ciphertext")
            .field("nonce", &self.nonce)
            .field("body_len", &self.body.len())
            .finish()
    }
}

pub fn dem_encrypt<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    key: &SymmetricKey,
    plaintext: &[u8],
    capsule: &Capsule,
) -> Result<Ciphertext> {
    dem_encrypt_with_limit(rng, key, plaintext, capsule, DEFAULT_MAX_PLAINTEXT)
}

pub fn dem_encrypt_with_limit<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    key: &SymmetricKey,
    plaintext: &[u8],
    capsule: &Capsule,
    limit: usize,
) -> Result<Ciphertext> {
    if plaintext.len() > limit {
        return Err(PreError::PlaintextTooLarge { size: plaintext.len(), limit });
    }
    let mut nonce = [0u8; NONCE_SIZE];
    rng.try_fill_bytes(&mut nonce).map_err(|_| PreError::Entropy)?;
    let associated_data = capsule.to_bytes().to_vec();
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.0));
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad: &associated_data })
        .map_err(|_| PreError::Decryption)?;
    Ok(Ciphertext { nonce, body, associated_data })
}

/// Wrong keys and tampered bodies produce the same error.
pub fn dem_decrypt(key: &SymmetricKey, ciphertext: &Ciphertext) -> Result<Vec<u8>> {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.0));
    cipher
        .decrypt(
            Nonce::from_slice(&ciphertext.nonce),
            Payload { msg: &ciphertext.body, aad: &ciphertext.associated_data },
        )
        .map_err(|_| PreError::Decryption)
}

/// Like [`dem_decrypt`], but reuses the ciphertext's buffer for the plaintext.
pub fn dem_decrypt_owned(key: &SymmetricKey, ciphertext: Ciphertext) -> Result<Vec<u8>> {
    let Ciphertext { nonce, mut body, associated_data } = ciphertext;
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.0));
    cipher
        .decrypt_in_place(Nonce::from_slice(&nonce), &associated_data, &mut body)
        .map_err(|_| PreError::Decryption)?;
    Ok(body)
}
