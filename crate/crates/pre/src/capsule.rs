use k256::{ProjectivePoint, Scalar};
use rand_core::{CryptoRng, RngCore};

use crate::curve::{
    hash_points_to_scalar, point_from_bytes, point_to_bytes, random_nonzero_scalar,
    scalar_from_bytes, scalar_to_bytes, DST_CAPSULE, POINT_SIZE, SCALAR_SIZE,
};
use crate::dem::SymmetricKey;
use crate::error::{PreError, Result};
use crate::keys::{PublicKey, SecretKey};

/// Serialized width: `point_e || point_v || signature_scalar`.
pub const CAPSULE_SIZE: usize = 2 * POINT_SIZE + SCALAR_SIZE;

/// KEM output. Publicly verifiable: `g·s == V + E·H(E, V)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Capsule {
    pub(crate) point_e: ProjectivePoint,
    pub(crate) point_v: ProjectivePoint,
    pub(crate) signature: Scalar,
}

impl Capsule {
    pub(crate) fn challenge(point_e: &ProjectivePoint, point_v: &ProjectivePoint) -> Scalar {
        hash_points_to_scalar(DST_CAPSULE, &[point_e, point_v], &[])
    }

    pub fn verify(&self) -> bool {
        let h = Self::challenge(&self.point_e, &self.point_v);
        ProjectivePoint::GENERATOR * self.signature == self.point_v + self.point_e * h
    }

    pub fn to_bytes(&self) -> [u8; CAPSULE_SIZE] {
        let mut out = [0u8; CAPSULE_SIZE];
        out[..POINT_SIZE].copy_from_slice(&point_to_bytes(&self.point_e));
        out[POINT_SIZE..2 * POINT_SIZE].copy_from_slice(&point_to_bytes(&self.point_v));
        out[2 * POINT_SIZE..].copy_from_slice(&scalar_to_bytes(&self.signature));
        out
    }

    /// Decodes and runs the self-check; a capsule that fails the check is
    /// never handed out.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CAPSULE_SIZE {
            return Err(PreError::Decode("capsule"));
        }
        let capsule = Self {
            point_e: point_from_bytes(&bytes[..POINT_SIZE], "capsule")?,
            point_v: point_from_bytes(&bytes[POINT_SIZE..2 * POINT_SIZE], "capsule")?,
            signature: scalar_from_bytes(&bytes[2 * POINT_SIZE..], "capsule")?,
        };
        if !capsule.verify() {
            return Err(PreError::InvalidCapsule);
        }
        Ok(capsule)
    }
}

/// Derives a fresh symmetric key for `recipient` together with the capsule
/// that lets the recipient (or a delegatee, via re-encapsulation) rederive it.
pub fn encapsulate<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    recipient: &PublicKey,
) -> Result<(SymmetricKey, Capsule)> {
    let r = random_nonzero_scalar(rng)?;
    let u = random_nonzero_scalar(rng)?;
    let point_e = ProjectivePoint::GENERATOR * r;
    let point_v = ProjectivePoint::GENERATOR * u;
    let h = Capsule::challenge(&point_e, &point_v);
    let signature = u + r * h;
    let shared = recipient.0 * (r + u);
    Ok((SymmetricKey::derive(&shared), Capsule { point_e, point_v, signature }))
}

pub fn decapsulate_original(owner: &SecretKey, capsule: &Capsule) -> Result<SymmetricKey> {
    if !capsule.verify() {
        return Err(PreError::InvalidCapsule);
    }
    let shared = (capsule.point_e + capsule.point_v) * owner.0;
    Ok(SymmetricKey::derive(&shared))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{dem_decrypt, dem_encrypt, generate_keypair};
    use rand_core::OsRng;

    #[test]
    fn kem_round_trip() {
        let kp = generate_keypair(&mut OsRng).unwrap();
        let (key, capsule) = encapsulate(&mut OsRng, &kp.public()).unwrap();
        assert!(capsule.verify());
        assert_eq!(decapsulate_original(kp.secret(), &capsule).unwrap(), key);
    }

    #[test]
    fn codec_round_trip() {
        let kp = generate_keypair(&mut OsRng).unwrap();
        let (_, capsule) = encapsulate(&mut OsRng, &kp.public()).unwrap();
        let bytes = capsule.to_bytes();
        let decoded = Capsule::from_bytes(&bytes).unwrap();
        assert_eq!(decoded, capsule);
        assert_eq!(decoded.to_bytes(), bytes);
        assert!(Capsule::from_bytes(&bytes[1..]).is_err());
    }

    #[test]
    fn every_single_byte_corruption_is_rejected() {
        let kp = generate_keypair(&mut OsRng).unwrap();
        let (_, capsule) = encapsulate(&mut OsRng, &kp.public()).unwrap();
        let bytes = capsule.to_bytes();
        for pos in 0..CAPSULE_SIZE {
            for mask in [0x01u8, 0x80, 0xff] {
                let mut bad = bytes;
                bad[pos] ^= mask;
                assert!(Capsule::from_bytes(&bad).is_err(), "pos {pos} mask {mask:#x}");
            }
        }
    }

    #[test]
    fn tampered_capsule_refused_before_kdf() {
        let kp = generate_keypair(&mut OsRng).unwrap();
        let (_, capsule) = encapsulate(&mut OsRng, &kp.public()).unwrap();
        let forged = Capsule { signature: capsule.signature + Scalar::ONE, ..capsule };
        assert_eq!(decapsulate_original(kp.secret(), &forged), Err(PreError::InvalidCapsule));
    }

    #[test]
    fn wrong_secret_key_fails_downstream() {
        let alice = generate_keypair(&mut OsRng).unwrap();
        let mallory = generate_keypair(&mut OsRng).unwrap();
        let (key, capsule) = encapsulate(&mut OsRng, &alice.public()).unwrap();
        let ct = dem_encrypt(&mut OsRng, &key, b"blood panel", &capsule).unwrap();
        let wrong = decapsulate_original(mallory.secret(), &capsule).unwrap();
        assert_ne!(wrong, key);
        assert_eq!(dem_decrypt(&wrong, &ct), Err(PreError::Decryption));
    }
}
