//! Re-encryption key generation and splitting.
//!
//! The delegator's secret `a` is blinded as `a / d`, where `d` is derived
//! from a Diffie-Hellman exchange between an ephemeral precursor and the
//! delegatee's public key, so only the delegatee can undo the blinding.
//! The blinded key is Shamir-shared: each fragment holds `f(x_i)` for a
//! degree `threshold - 1` polynomial with `f(0) = a / d`, where the share
//! index `x_i` is again bound to that Diffie-Hellman point.

use k256::{ProjectivePoint, Scalar};
use rand_core::{CryptoRng, RngCore};

use crate::curve::{
    hash_points_to_scalar, nonzero_scalar_from_bytes, point_from_bytes, point_to_bytes, point_u,
    poly_eval, random_nonzero_scalar, scalar_from_bytes, scalar_to_bytes, DST_NON_INTERACTIVE,
    DST_X_COORDINATE, POINT_SIZE, SCALAR_SIZE,
};
use crate::error::{PreError, Result};
use crate::keys::{
    KeyPair, PublicKey, Signature, SigningKeyPair, VerifyingKey, SIGNATURE_SIZE,
};

/// Serialized width:
/// `id || threshold (u16 BE) || rekey_share || precursor || commitment || signature`.
pub const KFRAG_SIZE: usize = SCALAR_SIZE + 2 + SCALAR_SIZE + 2 * POINT_SIZE + SIGNATURE_SIZE;

const SIGNATURE_TAG: &[u8] = b"MEDSHARE-PRE-V1_KFRAG";

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KeyFragment {
    pub(crate) id: Scalar,
    pub(crate) threshold: u16,
    pub(crate) rekey_share: Scalar,
    pub(crate) precursor: ProjectivePoint,
    pub(crate) commitment: ProjectivePoint,
    pub(crate) signature: Signature,
}

/// Message the delegator signs for each fragment. Shared with the capsule
/// fragment verifier, which re-checks the same signature.
pub(crate) fn validity_message(
    id: &Scalar,
    threshold: u16,
    delegator: &PublicKey,
    delegatee: &PublicKey,
    commitment: &ProjectivePoint,
    precursor: &ProjectivePoint,
) -> Vec<u8> {
    let mut msg = Vec::with_capacity(SIGNATURE_TAG.len() + SCALAR_SIZE + 2 + 4 * POINT_SIZE);
    msg.extend_from_slice(SIGNATURE_TAG);
    msg.extend_from_slice(&scalar_to_bytes(id));
    msg.extend_from_slice(&threshold.to_be_bytes());
    msg.extend_from_slice(&delegator.to_bytes());
    msg.extend_from_slice(&delegatee.to_bytes());
    msg.extend_from_slice(&point_to_bytes(commitment));
    msg.extend_from_slice(&point_to_bytes(precursor));
    msg
}

pub(crate) fn blinding_factor(
    precursor: &ProjectivePoint,
    delegatee: &ProjectivePoint,
    dh_point: &ProjectivePoint,
) -> Scalar {
    hash_points_to_scalar(DST_NON_INTERACTIVE, &[precursor, delegatee, dh_point], &[])
}

pub(crate) fn share_index(
    precursor: &ProjectivePoint,
    delegatee: &ProjectivePoint,
    dh_point: &ProjectivePoint,
    id: &Scalar,
) -> Scalar {
    hash_points_to_scalar(
        DST_X_COORDINATE,
        &[precursor, delegatee, dh_point],
        &scalar_to_bytes(id),
    )
}

impl KeyFragment {
    pub fn id_bytes(&self) -> [u8; SCALAR_SIZE] {
        scalar_to_bytes(&self.id)
    }

    pub fn threshold(&self) -> usize {
        usize::from(self.threshold)
    }

    pub fn to_bytes(&self) -> [u8; KFRAG_SIZE] {
        let mut out = [0u8; KFRAG_SIZE];
        let mut at = 0;
        let mut put = |chunk: &[u8]| {
            out[at..at + chunk.len()].copy_from_slice(chunk);
            at += chunk.len();
        };
        put(&scalar_to_bytes(&self.id));
        put(&self.threshold.to_be_bytes());
        put(&scalar_to_bytes(&self.rekey_share));
        put(&point_to_bytes(&self.precursor));
        put(&point_to_bytes(&self.commitment));
        put(&self.signature.to_bytes());
        out
    }

    /// Structural decode only; call [`verify_kfrag`] for authenticity.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const WHAT: &str = "key fragment";
        if bytes.len() != KFRAG_SIZE {
            return Err(PreError::Decode(WHAT));
        }
        let (id, rest) = bytes.split_at(SCALAR_SIZE);
        let (threshold, rest) = rest.split_at(2);
        let (share, rest) = rest.split_at(SCALAR_SIZE);
        let (precursor, rest) = rest.split_at(POINT_SIZE);
        let (commitment, signature) = rest.split_at(POINT_SIZE);
        let threshold = u16::from_be_bytes([threshold[0], threshold[1]]);
        if threshold == 0 {
            return Err(PreError::Decode(WHAT));
        }
        Ok(Self {
            id: nonzero_scalar_from_bytes(id, WHAT)?,
            threshold,
            rekey_share: scalar_from_bytes(share, WHAT)?,
            precursor: point_from_bytes(precursor, WHAT)?,
            commitment: point_from_bytes(commitment, WHAT)?,
            signature: Signature::from_bytes(signature)?,
        })
    }

    pub fn verify(
        &self,
        delegator_vk: &VerifyingKey,
        delegator_pk: &PublicKey,
        delegatee_pk: &PublicKey,
    ) -> bool {
        if point_u() * self.rekey_share != self.commitment {
            return false;
        }
        let msg = validity_message(
            &self.id,
            self.threshold,
            delegator_pk,
            delegatee_pk,
            &self.commitment,
            &self.precursor,
        );
        delegator_vk.verify(&msg, &self.signature)
    }
}

/// Splits the delegator→delegatee re-encryption key into `shares`
/// fragments, any `threshold` of which suffice. Only the delegatee's
/// public key is needed.
pub fn generate_kfrags<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    delegator: &KeyPair,
    delegator_signing: &SigningKeyPair,
    delegatee_pk: &PublicKey,
    threshold: usize,
    shares: usize,
) -> Result<Vec<KeyFragment>> {
    if threshold == 0 || threshold > shares || shares > usize::from(u16::MAX) {
        return Err(PreError::Parameters { threshold, shares });
    }

    let precursor_secret = random_nonzero_scalar(rng)?;
    let precursor = ProjectivePoint::GENERATOR * precursor_secret;
    let dh_point = delegatee_pk.0 * precursor_secret;
    let d = blinding_factor(&precursor, &delegatee_pk.0, &dh_point);
    let d_inv = Option::<Scalar>::from(d.invert()).ok_or(PreError::Entropy)?;

    let mut coefficients = Vec::with_capacity(threshold);
    coefficients.push(delegator.secret().0 * d_inv);
    for _ in 1..threshold {
        coefficients.push(random_nonzero_scalar(rng)?);
    }

    let threshold_u16 = threshold as u16;
    let delegator_pk = delegator.public();
    let mut fragments: Vec<KeyFragment> = Vec::with_capacity(shares);
    while fragments.len() < shares {
        let id = random_nonzero_scalar(rng)?;
        if fragments.iter().any(|f| f.id == id) {
            continue;
        }
        let x = share_index(&precursor, &delegatee_pk.0, &dh_point, &id);
        let rekey_share = poly_eval(&coefficients, &x);
        let commitment = point_u() * rekey_share;
        let msg = validity_message(
            &id,
            threshold_u16,
            &delegator_pk,
            delegatee_pk,
            &commitment,
            &precursor,
        );
        fragments.push(KeyFragment {
            id,
            threshold: threshold_u16,
            rekey_share,
            precursor,
            commitment,
            signature: delegator_signing.sign(&msg),
        });
    }
    Ok(fragments)
}

pub fn verify_kfrag(
    kfrag: &KeyFragment,
    delegator_vk: &VerifyingKey,
    delegator_pk: &PublicKey,
    delegatee_pk: &PublicKey,
) -> bool {
    kfrag.verify(delegator_vk, delegator_pk, delegatee_pk)
}
