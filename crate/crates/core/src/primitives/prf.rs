//! Blake2s-256 hashing, the key-prefix PRF and the PRF-based PRG.

use std::collections::HashSet;

use blake2::{Blake2s256, Digest};
use rand::{CryptoRng, RngCore};

use super::{byte_newtype, PrimitiveError};
use crate::primitives::wire::Tag;

pub const PRF_BYTES: usize = 32;

byte_newtype!(
    /// 32-byte PRF seed.
    PrfKey,
    32,
    Tag::PrfKey
);

byte_newtype!(
    /// One 256-bit PRF block.
    PrfOutput,
    32,
    Tag::PrfOutput
);

impl PrfKey {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        Self(k)
    }

    pub fn xor(&self, other: &PrfKey) -> PrfKey {
        let mut out = [0u8; 32];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a ^ b;
        }
        PrfKey(out)
    }
}

/// Blake2s-256 over the concatenation of `parts`.
pub fn hash(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Blake2s256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// `prf(k, m) = Blake2s-256(k || m)`.
pub fn prf_eval(key: &PrfKey, input: &[u8]) -> PrfOutput {
    PrfOutput(hash(&[&key.0, input]))
}

/// Evaluates the PRF on each input. Inputs must be pairwise distinct, otherwise
/// two output blocks would be identical.
pub fn prg_expand(key: &PrfKey, inputs: &[&[u8]]) -> Result<Vec<PrfOutput>, PrimitiveError> {
    let mut seen = HashSet::with_capacity(inputs.len());
    for (i, input) in inputs.iter().enumerate() {
        if !seen.insert(*input) {
            return Err(PrimitiveError::DuplicatePrgInput(i));
        }
    }
    Ok(inputs.iter().map(|m| prf_eval(key, m)).collect())
}

/// Derives `len` pseudorandom bytes from `(key, input)`.
///
/// A single block `prf(key, input)` is used while it suffices; longer requests
/// use `prf(key, input || 0) || prf(key, input || 1) || ...` with a 4-byte
/// big-endian counter. The result is truncated to `len`.
pub fn prf_stream(key: &PrfKey, input: &[u8], len: usize) -> Vec<u8> {
    if len <= PRF_BYTES {
        return prf_eval(key, input).0[..len].to_vec();
    }
    let mut out = Vec::with_capacity(len.next_multiple_of(PRF_BYTES));
    let mut counter = 0u32;
    let mut buf = Vec::with_capacity(input.len() + 4);
    while out.len() < len {
        buf.clear();
        buf.extend_from_slice(input);
        buf.extend_from_slice(&counter.to_be_bytes());
        out.extend_from_slice(&prf_eval(key, &buf).0);
        counter += 1;
    }
    out.truncate(len);
    out
}
