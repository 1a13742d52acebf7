//! Group helpers over secp256k1: fixed-width codecs, sampling and
//! domain-separated hashing.

use std::sync::OnceLock;

use k256::elliptic_curve::group::GroupEncoding;
use k256::elliptic_curve::hash2curve::{ExpandMsgXmd, GroupDigest};
use k256::elliptic_curve::PrimeField;
use k256::{ProjectivePoint, Scalar, Secp256k1};
use rand_core::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::error::{PreError, Result};

/// Compressed SEC1 point width.
pub const POINT_SIZE: usize = 33;
/// Big-endian scalar width.
pub const SCALAR_SIZE: usize = 32;

const MAX_SAMPLING_ATTEMPTS: usize = 64;

pub(crate) const DST_POINT_U: &[u8] = b"MEDSHARE-PRE-V1_POINT_U";
pub(crate) const DST_CAPSULE: &[u8] = b"MEDSHARE-PRE-V1_CAPSULE";
pub(crate) const DST_NON_INTERACTIVE: &[u8] = b"MEDSHARE-PRE-V1_NON_INTERACTIVE";
pub(crate) const DST_X_COORDINATE: &[u8] = b"MEDSHARE-PRE-V1_X_COORDINATE";
pub(crate) const DST_CFRAG_PROOF: &[u8] = b"MEDSHARE-PRE-V1_CFRAG_PROOF";

/// Second generator with no known discrete log relative to the base point.
pub(crate) fn point_u() -> ProjectivePoint {
    static U: OnceLock<ProjectivePoint> = OnceLock::new();
    *U.get_or_init(|| {
        let g = point_to_bytes(&ProjectivePoint::GENERATOR);
        Secp256k1::hash_from_bytes::<ExpandMsgXmd<Sha256>>(&[&g], &[DST_POINT_U])
            .expect("hash-to-curve with a fixed DST cannot fail")
    })
}

pub(crate) fn point_to_bytes(point: &ProjectivePoint) -> [u8; POINT_SIZE] {
    point.to_bytes().into()
}

pub(crate) fn point_from_bytes(bytes: &[u8], what: &'static str) -> Result<ProjectivePoint> {
    let array: [u8; POINT_SIZE] = bytes.try_into().map_err(|_| PreError::Decode(what))?;
    let point: Option<ProjectivePoint> = ProjectivePoint::from_bytes(&array.into()).into();
    match point {
        Some(p) if p != ProjectivePoint::IDENTITY => Ok(p),
        _ => Err(PreError::Decode(what)),
    }
}

pub(crate) fn scalar_to_bytes(scalar: &Scalar) -> [u8; SCALAR_SIZE] {
    scalar.to_bytes().into()
}

/// Rejects non-canonical encodings (values at or above the group order).
pub(crate) fn scalar_from_bytes(bytes: &[u8], what: &'static str) -> Result<Scalar> {
    let array: [u8; SCALAR_SIZE] = bytes.try_into().map_err(|_| PreError::Decode(what))?;
    Option::<Scalar>::from(Scalar::from_repr(array.into())).ok_or(PreError::Decode(what))
}

pub(crate) fn nonzero_scalar_from_bytes(bytes: &[u8], what: &'static str) -> Result<Scalar> {
    let s = scalar_from_bytes(bytes, what)?;
    if bool::from(s.is_zero()) {
        return Err(PreError::Decode(what));
    }
    Ok(s)
}

/// Draws a uniformly random nonzero scalar by rejection sampling.
pub(crate) fn random_nonzero_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Scalar> {
    let mut buf = [0u8; SCALAR_SIZE];
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        rng.try_fill_bytes(&mut buf).map_err(|_| PreError::Entropy)?;
        let candidate: Option<Scalar> = Scalar::from_repr(buf.into()).into();
        if let Some(s) = candidate {
            if !bool::from(s.is_zero()) {
                return Ok(s);
            }
        }
    }
    Err(PreError::Entropy)
}

pub(crate) fn hash_to_scalar(dst: &[u8], parts: &[&[u8]]) -> Scalar {
    Secp256k1::hash_to_scalar::<ExpandMsgXmd<Sha256>>(parts, &[dst])
        .expect("expand_message_xmd accepts any input with a short DST")
}

pub(crate) fn hash_points_to_scalar(dst: &[u8], points: &[&ProjectivePoint], extra: &[u8]) -> Scalar {
    let encoded: Vec<[u8; POINT_SIZE]> = points.iter().map(|p| point_to_bytes(p)).collect();
    let mut parts: Vec<&[u8]> = encoded.iter().map(|e| e.as_slice()).collect();
    parts.push(extra);
    hash_to_scalar(dst, &parts)
}

/// Lagrange basis coefficient for `x_i` evaluated at zero over the
/// interpolation points `xs`.
pub(crate) fn lagrange_at_zero(x_i: &Scalar, xs: &[Scalar]) -> Scalar {
    let mut num = Scalar::ONE;
    let mut den = Scalar::ONE;
    for x_j in xs.iter().filter(|x_j| *x_j != x_i) {
        num *= x_j;
        den *= *x_j - x_i;
    }
    num * den.invert().expect("interpolation points are distinct")
}

/// Horner evaluation of a polynomial given by ascending coefficients.
pub(crate) fn poly_eval(coefficients: &[Scalar], x: &Scalar) -> Scalar {
    coefficients
        .iter()
        .rev()
        .fold(Scalar::ZERO, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn point_codec_rejects_identity_and_garbage() {
        assert!(point_from_bytes(&[0u8; POINT_SIZE], "point").is_err());
        assert!(point_from_bytes(&[0xffu8; POINT_SIZE], "point").is_err());
        assert!(point_from_bytes(&[2u8; 5], "point").is_err());
        let g = point_to_bytes(&ProjectivePoint::GENERATOR);
        assert_eq!(point_from_bytes(&g, "point").unwrap(), ProjectivePoint::GENERATOR);
    }

    #[test]
    fn scalar_codec_rejects_group_order() {
        // secp256k1 group order n.
        let n = [
            0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
            0xff, 0xfe, 0xba, 0xae, 0xdc, 0xe6, 0xaf, 0x48, 0xa0, 0x3b, 0xbf, 0xd2, 0x5e, 0x8c,
            0xd0, 0x36, 0x41, 0x41,
        ];
        assert!(scalar_from_bytes(&n, "scalar").is_err());
        let mut n_minus_one = n;
        n_minus_one[31] = 0x40;
        assert_eq!(scalar_from_bytes(&n_minus_one, "scalar").unwrap(), -Scalar::ONE);
        assert!(nonzero_scalar_from_bytes(&[0u8; 32], "scalar").is_err());
    }

    #[test]
    fn lagrange_recovers_constant_term() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let coeffs: Vec<Scalar> = (0..3).map(|_| random_nonzero_scalar(&mut rng).unwrap()).collect();
        let xs: Vec<Scalar> = (0..5).map(|_| random_nonzero_scalar(&mut rng).unwrap()).collect();
        let ys: Vec<Scalar> = xs.iter().map(|x| poly_eval(&coeffs, x)).collect();
        for window in [&[0usize, 1, 2][..], &[2, 3, 4], &[0, 2, 4, 1]] {
            let sub_x: Vec<Scalar> = window.iter().map(|&i| xs[i]).collect();
            let secret = window
                .iter()
                .map(|&i| ys[i] * lagrange_at_zero(&xs[i], &sub_x))
                .fold(Scalar::ZERO, |a, b| a + b);
            assert_eq!(secret, coeffs[0]);
        }
    }

    #[test]
    fn point_u_is_not_the_generator() {
        assert_ne!(point_u(), ProjectivePoint::GENERATOR);
        assert_eq!(point_u(), point_u());
    }
}
