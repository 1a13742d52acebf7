//! Capsule re-encapsulation by the proxy and threshold decapsulation by the
//! delegatee.
//!
//! Each capsule fragment carries a Chaum-Pedersen style proof that the same
//! re-key share was applied to `E`, `V` and the delegator-signed commitment
//! `U·rk`, so a verifier holding only public material can reject a proxy
//! that used anything other than its assigned key fragment.

use std::collections::HashSet;

use k256::{ProjectivePoint, Scalar};
use rand_core::{CryptoRng, RngCore};

use crate::capsule::Capsule;
use crate::curve::{
    hash_points_to_scalar, lagrange_at_zero, nonzero_scalar_from_bytes, point_from_bytes,
    point_to_bytes, point_u, random_nonzero_scalar, scalar_from_bytes, scalar_to_bytes,
    DST_CFRAG_PROOF, POINT_SIZE, SCALAR_SIZE,
};
use crate::dem::SymmetricKey;
use crate::error::{PreError, Result};
use crate::keys::{KeyPair, PublicKey, Signature, VerifyingKey, SIGNATURE_SIZE};
use crate::kfrag::{blinding_factor, share_index, validity_message, KeyFragment};

/// Serialized width:
/// `e1 || v1 || id || threshold || precursor || e2 || v2 || commitment || pok || z || signature`.
pub const CFRAG_SIZE: usize = 7 * POINT_SIZE + 2 * SCALAR_SIZE + 2 + SIGNATURE_SIZE;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CorrectnessProof {
    pub(crate) point_e2: ProjectivePoint,
    pub(crate) point_v2: ProjectivePoint,
    pub(crate) kfrag_commitment: ProjectivePoint,
    pub(crate) kfrag_pok: ProjectivePoint,
    pub(crate) response: Scalar,
    pub(crate) kfrag_signature: Signature,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CapsuleFragment {
    pub(crate) point_e1: ProjectivePoint,
    pub(crate) point_v1: ProjectivePoint,
    pub(crate) kfrag_id: Scalar,
    pub(crate) threshold: u16,
    pub(crate) precursor: ProjectivePoint,
    pub(crate) proof: CorrectnessProof,
}

#[allow(clippy::too_many_arguments)]
fn proof_challenge(
    capsule: &Capsule,
    e1: &ProjectivePoint,
    e2: &ProjectivePoint,
    v1: &ProjectivePoint,
    v2: &ProjectivePoint,
    commitment: &ProjectivePoint,
    pok: &ProjectivePoint,
) -> Scalar {
    let u = point_u();
    hash_points_to_scalar(
        DST_CFRAG_PROOF,
        &[&capsule.point_e, e1, e2, &capsule.point_v, v1, v2, &u, commitment, pok],
        &[],
    )
}

impl CapsuleFragment {
    pub fn id_bytes(&self) -> [u8; SCALAR_SIZE] {
        scalar_to_bytes(&self.kfrag_id)
    }

    pub fn threshold(&self) -> usize {
        usize::from(self.threshold)
    }

    pub fn to_bytes(&self) -> [u8; CFRAG_SIZE] {
        let mut out = [0u8; CFRAG_SIZE];
        let mut at = 0;
        let mut put = |chunk: &[u8]| {
            out[at..at + chunk.len()].copy_from_slice(chunk);
            at += chunk.len();
        };
        put(&point_to_bytes(&self.point_e1));
        put(&point_to_bytes(&self.point_v1));
        put(&scalar_to_bytes(&self.kfrag_id));
        put(&self.threshold.to_be_bytes());
        put(&point_to_bytes(&self.precursor));
        put(&point_to_bytes(&self.proof.point_e2));
        put(&point_to_bytes(&self.proof.point_v2));
        put(&point_to_bytes(&self.proof.kfrag_commitment));
        put(&point_to_bytes(&self.proof.kfrag_pok));
        put(&scalar_to_bytes(&self.proof.response));
        put(&self.proof.kfrag_signature.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const WHAT: &str = "capsule fragment";
        if bytes.len() != CFRAG_SIZE {
            return Err(PreError::Decode(WHAT));
        }
        let mut rest = bytes;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head
        };
        let point_e1 = point_from_bytes(take(POINT_SIZE), WHAT)?;
        let point_v1 = point_from_bytes(take(POINT_SIZE), WHAT)?;
        let kfrag_id = nonzero_scalar_from_bytes(take(SCALAR_SIZE), WHAT)?;
        let t = take(2);
        let threshold = u16::from_be_bytes([t[0], t[1]]);
        if threshold == 0 {
            return Err(PreError::Decode(WHAT));
        }
        let precursor = point_from_bytes(take(POINT_SIZE), WHAT)?;
        let proof = CorrectnessProof {
            point_e2: point_from_bytes(take(POINT_SIZE), WHAT)?,
            point_v2: point_from_bytes(take(POINT_SIZE), WHAT)?,
            kfrag_commitment: point_from_bytes(take(POINT_SIZE), WHAT)?,
            kfrag_pok: point_from_bytes(take(POINT_SIZE), WHAT)?,
            response: scalar_from_bytes(take(SCALAR_SIZE), WHAT)?,
            kfrag_signature: Signature::from_bytes(take(SIGNATURE_SIZE))?,
        };
        Ok(Self { point_e1, point_v1, kfrag_id, threshold, precursor, proof })
    }

    pub fn verify(
        &self,
        capsule: &Capsule,
        delegator_vk: &VerifyingKey,
        delegator_pk: &PublicKey,
        delegatee_pk: &PublicKey,
    ) -> bool {
        if !capsule.verify() {
            return false;
        }
        let proof = &self.proof;
        let msg = validity_message(
            &self.kfrag_id,
            self.threshold,
            delegator_pk,
            delegatee_pk,
            &proof.kfrag_commitment,
            &self.precursor,
        );
        if !delegator_vk.verify(&msg, &proof.kfrag_signature) {
            return false;
        }
        let h = proof_challenge(
            capsule,
            &self.point_e1,
            &proof.point_e2,
            &self.point_v1,
            &proof.point_v2,
            &proof.kfrag_commitment,
            &proof.kfrag_pok,
        );
        let z = proof.response;
        capsule.point_e * z == proof.point_e2 + self.point_e1 * h
            && capsule.point_v * z == proof.point_v2 + self.point_v1 * h
            && point_u() * z == proof.kfrag_pok + proof.kfrag_commitment * h
    }
}

/// Applies one key fragment to a capsule. Operates on the capsule alone;
/// no ciphertext or key material beyond the fragment is involved.
pub fn reencapsulate<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    kfrag: &KeyFragment,
    capsule: &Capsule,
) -> Result<CapsuleFragment> {
    if !capsule.verify() {
        return Err(PreError::InvalidCapsule);
    }
    let rk = kfrag.rekey_share;
    let point_e1 = capsule.point_e * rk;
    let point_v1 = capsule.point_v * rk;

    let t = random_nonzero_scalar(rng)?;
    let point_e2 = capsule.point_e * t;
    let point_v2 = capsule.point_v * t;
    let kfrag_pok = point_u() * t;
    let h = proof_challenge(
        capsule,
        &point_e1,
        &point_e2,
        &point_v1,
        &point_v2,
        &kfrag.commitment,
        &kfrag_pok,
    );
    Ok(CapsuleFragment {
        point_e1,
        point_v1,
        kfrag_id: kfrag.id,
        threshold: kfrag.threshold,
        precursor: kfrag.precursor,
        proof: CorrectnessProof {
            point_e2,
            point_v2,
            kfrag_commitment: kfrag.commitment,
            kfrag_pok,
            response: t + h * rk,
            kfrag_signature: kfrag.signature,
        },
    })
}

pub fn verify_cfrag(
    cfrag: &CapsuleFragment,
    capsule: &Capsule,
    delegator_vk: &VerifyingKey,
    delegator_pk: &PublicKey,
    delegatee_pk: &PublicKey,
) -> bool {
    cfrag.verify(capsule, delegator_vk, delegator_pk, delegatee_pk)
}

/// Recovers the symmetric key from at least `threshold` verified capsule
/// fragments with distinct ids. Duplicates are ignored.
pub fn decapsulate_reencrypted(
    delegatee: &KeyPair,
    delegator_pk: &PublicKey,
    delegator_vk: &VerifyingKey,
    capsule: &Capsule,
    cfrags: &[CapsuleFragment],
) -> Result<SymmetricKey> {
    if !capsule.verify() {
        return Err(PreError::InvalidCapsule);
    }
    let first = cfrags.first().ok_or(PreError::Threshold { needed: 1, got: 0 })?;
    let delegatee_pk = delegatee.public();
    for (index, cfrag) in cfrags.iter().enumerate() {
        if !cfrag.verify(capsule, delegator_vk, delegator_pk, &delegatee_pk) {
            return Err(PreError::InvalidFragment { index });
        }
        if cfrag.precursor != first.precursor || cfrag.threshold != first.threshold {
            return Err(PreError::MixedFragments);
        }
    }

    let mut seen = HashSet::new();
    let distinct: Vec<&CapsuleFragment> =
        cfrags.iter().filter(|c| seen.insert(c.id_bytes())).collect();
    let needed = first.threshold();
    if distinct.len() < needed {
        return Err(PreError::Threshold { needed, got: distinct.len() });
    }
    let chosen = &distinct[..needed];

    let precursor = first.precursor;
    let dh_point = precursor * delegatee.secret().0;
    let xs: Vec<Scalar> = chosen
        .iter()
        .map(|c| share_index(&precursor, &delegatee_pk.0, &dh_point, &c.kfrag_id))
        .collect();
    let (mut e_prime, mut v_prime) = (ProjectivePoint::IDENTITY, ProjectivePoint::IDENTITY);
    for (cfrag, x) in chosen.iter().zip(&xs) {
        let lambda = lagrange_at_zero(x, &xs);
        e_prime += cfrag.point_e1 * lambda;
        v_prime += cfrag.point_v1 * lambda;
    }

    // With a correct reconstruction E' = E·a/d and V' = V·a/d, hence
    // pk_A·(s/d) = V' + E'·h.
    let d = blinding_factor(&precursor, &delegatee_pk.0, &dh_point);
    let d_inv = Option::<Scalar>::from(d.invert()).ok_or(PreError::Reconstruction)?;
    let h = Capsule::challenge(&capsule.point_e, &capsule.point_v);
    if delegator_pk.0 * (capsule.signature * d_inv) != v_prime + e_prime * h {
        return Err(PreError::Reconstruction);
    }
    Ok(SymmetricKey::derive(&((e_prime + v_prime) * d)))
}
