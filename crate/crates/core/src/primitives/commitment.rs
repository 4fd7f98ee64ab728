//! Hiding and binding commitments with 32-byte encodings.
//!
//! [`CommitmentScheme::Hash`] is `Blake2s(tag || len(v) || v || r)`. The
//! [`CommitmentScheme::Pedersen`] variant commits over ristretto255 as
//! `H(v)·G + r·H` and produces the same 32-byte encoding, so either can back
//! the relations.

use blake2::Blake2b512;
use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::byte_newtype;
use super::prf::hash;
use crate::primitives::wire::Tag;

const HASH_COMMIT_TAG: &[u8] = b"vldp/commit/hash/v1";
const PEDERSEN_VALUE_TAG: &[u8] = b"vldp/commit/pedersen/value";
const PEDERSEN_GENERATOR_TAG: &[u8] = b"vldp/commit/pedersen/generator-h";

byte_newtype!(
    /// Commitment encoding.
    Commitment,
    32,
    Tag::Commitment
);

byte_newtype!(
    /// Commitment randomness `r`.
    Blinding,
    32,
    Tag::Blinding
);

impl Blinding {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut r = [0u8; 32];
        rng.fill_bytes(&mut r);
        Self(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CommitmentScheme {
    #[default]
    Hash,
    Pedersen,
}

impl CommitmentScheme {
    pub fn id(self) -> u8 {
        match self {
            CommitmentScheme::Hash => 1,
            CommitmentScheme::Pedersen => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(CommitmentScheme::Hash),
            2 => Some(CommitmentScheme::Pedersen),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CommitmentScheme::Hash => "hash",
            CommitmentScheme::Pedersen => "pedersen",
        }
    }

    pub fn commit(self, value: &[u8], r: &Blinding) -> Commitment {
        match self {
            CommitmentScheme::Hash => {
                let len = (value.len() as u32).to_be_bytes();
                Commitment(hash(&[HASH_COMMIT_TAG, &len, value, &r.0]))
            }
            CommitmentScheme::Pedersen => {
                let v = Scalar::hash_from_bytes::<Blake2b512>(&[PEDERSEN_VALUE_TAG, value].concat());
                let r = Scalar::from_bytes_mod_order(r.0);
                let point = v * RISTRETTO_BASEPOINT_POINT + r * pedersen_h();
                Commitment(point.compress().to_bytes())
            }
        }
    }

    pub fn verify(self, cm: &Commitment, value: &[u8], r: &Blinding) -> bool {
        self.commit(value, r) == *cm
    }
}

fn pedersen_h() -> RistrettoPoint {
    RistrettoPoint::hash_from_bytes::<Blake2b512>(PEDERSEN_GENERATOR_TAG)
}

/// Commits with the default (hash) scheme.
pub fn commit(value: &[u8], r: &Blinding) -> Commitment {
    CommitmentScheme::Hash.commit(value, r)
}

pub fn commit_verify(cm: &Commitment, value: &[u8], r: &Blinding) -> bool {
    CommitmentScheme::Hash.verify(cm, value, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const SCHEMES: [CommitmentScheme; 2] = [CommitmentScheme::Hash, CommitmentScheme::Pedersen];

    #[test]
    fn round_trip_and_binding() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for scheme in SCHEMES {
            let r = Blinding::random(&mut rng);
            let v = [7u8; 32];
            let cm = scheme.commit(&v, &r);
            assert!(scheme.verify(&cm, &v, &r));

            let mut flipped = v;
            flipped[3] ^= 0x10;
            assert!(!scheme.verify(&cm, &flipped, &r));

            let mut r2 = r;
            r2.0[0] ^= 1;
            assert!(!scheme.verify(&cm, &v, &r2));
        }
    }

    #[test]
    fn hiding_smoke_distinct_blindings() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for scheme in SCHEMES {
            let a = scheme.commit(b"same", &Blinding::random(&mut rng));
            let b = scheme.commit(b"same", &Blinding::random(&mut rng));
            assert_ne!(a, b);
        }
    }

    #[test]
    fn exhaustive_single_byte_binding() {
        let r = Blinding([0x42; 32]);
        for scheme in SCHEMES {
            let all: std::collections::HashSet<_> =
                (0..=255u8).map(|v| scheme.commit(&[v], &r)).collect();
            assert_eq!(all.len(), 256, "{scheme:?}");
        }
    }

    #[test]
    fn malformed_commitment_does_not_verify() {
        let r = Blinding([1; 32]);
        let garbage = Commitment([0xff; 32]);
        assert!(!CommitmentScheme::Pedersen.verify(&garbage, b"v", &r));
        assert!(!commit_verify(&garbage, b"v", &r));
    }

    #[test]
    fn schemes_are_not_interchangeable() {
        let r = Blinding([9; 32]);
        assert_ne!(
            CommitmentScheme::Hash.commit(b"v", &r),
            CommitmentScheme::Pedersen.commit(b"v", &r)
        );
    }
}
