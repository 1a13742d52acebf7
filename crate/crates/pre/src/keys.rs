use std::fmt;

use k256::ecdsa::signature::{Signer, Verifier};
use k256::{ecdsa, ProjectivePoint, Scalar};
use rand_core::{CryptoRng, RngCore};

use crate::curve::{
    nonzero_scalar_from_bytes, point_from_bytes, point_to_bytes, random_nonzero_scalar,
    scalar_to_bytes, POINT_SIZE, SCALAR_SIZE,
};
use crate::error::{PreError, Result};

pub const SIGNATURE_SIZE: usize = 64;

/// Decryption secret. Never leaves request scope in the services.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(pub(crate) Scalar);

impl SecretKey {
    pub fn to_bytes(&self) -> [u8; SCALAR_SIZE] {
        scalar_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        nonzero_scalar_from_bytes(bytes, "secret key").map(Self)
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(ProjectivePoint::GENERATOR * self.0)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PublicKey(pub(crate) ProjectivePoint);

impl PublicKey {
    pub fn to_bytes(&self) -> [u8; POINT_SIZE] {
        point_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        point_from_bytes(bytes, "public key").map(Self)
    }
}

#[derive(Clone, Debug)]
pub struct KeyPair {
    secret: SecretKey,
    public: PublicKey,
}

impl KeyPair {
    pub fn from_secret(secret: SecretKey) -> Self {
        let public = secret.public_key();
        Self { secret, public }
    }

    pub fn secret(&self) -> &SecretKey {
        &self.secret
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }
}

/// Samples a fresh decryption keypair. Zero or out-of-range draws are
/// discarded and redrawn.
pub fn generate_keypair<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<KeyPair> {
    let secret = SecretKey(random_nonzero_scalar(rng)?);
    Ok(KeyPair::from_secret(secret))
}

/// Fixed-width `r || s` ECDSA signature.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub(crate) [u8; SIGNATURE_SIZE]);

impl Signature {
    pub fn to_bytes(&self) -> [u8; SIGNATURE_SIZE] {
        self.0
    }

    /// Only the width is checked here; range checks happen on verification.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        bytes
            .try_into()
            .map(Self)
            .map_err(|_| PreError::Decode("signature"))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({:02x}{:02x}..)", self.0[0], self.0[1])
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct VerifyingKey(ecdsa::VerifyingKey);

impl VerifyingKey {
    pub fn to_bytes(&self) -> [u8; POINT_SIZE] {
        let encoded = self.0.to_encoded_point(true);
        encoded
            .as_bytes()
            .try_into()
            .expect("compressed verifying keys are 33 bytes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != POINT_SIZE {
            return Err(PreError::Decode("verifying key"));
        }
        ecdsa::VerifyingKey::from_sec1_bytes(bytes)
            .map(Self)
            .map_err(|_| PreError::Decode("verifying key"))
    }

    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        match ecdsa::Signature::from_slice(&signature.0) {
            Ok(sig) => self.0.verify(message, &sig).is_ok(),
            Err(_) => false,
        }
    }
}

/// Deterministic (RFC 6979) ECDSA signing key over the same curve as the
/// encryption keys.
#[derive(Clone)]
pub struct SigningKey(ecdsa::SigningKey);

impl SigningKey {
    pub fn to_bytes(&self) -> [u8; SCALAR_SIZE] {
        self.0.to_bytes().into()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let scalar = nonzero_scalar_from_bytes(bytes, "signing key")?;
        ecdsa::SigningKey::from_bytes(&scalar.to_bytes())
            .map(Self)
            .map_err(|_| PreError::Decode("signing key"))
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey(*self.0.verifying_key())
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        let sig: ecdsa::Signature = self.0.sign(message);
        Signature(sig.to_bytes().into())
    }
}

impl fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SigningKey(..)")
    }
}

#[derive(Clone, Debug)]
pub struct SigningKeyPair {
    signing: SigningKey,
    verifying: VerifyingKey,
}

impl SigningKeyPair {
    pub fn from_signing_key(signing: SigningKey) -> Self {
        let verifying = signing.verifying_key();
        Self { signing, verifying }
    }

    pub fn signing(&self) -> &SigningKey {
        &self.signing
    }

    pub fn verifying(&self) -> VerifyingKey {
        self.verifying
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        self.signing.sign(message)
    }
}

pub fn generate_signing_keypair<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
) -> Result<SigningKeyPair> {
    let scalar = random_nonzero_scalar(rng)?;
    let signing = SigningKey::from_bytes(&scalar_to_bytes(&scalar))?;
    Ok(SigningKeyPair::from_signing_key(signing))
}
