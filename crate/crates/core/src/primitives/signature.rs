//! Schnorr signatures over ristretto255.
//!
//! A signature is `R || s` (64 bytes) with `R = r·G`, `e = H(R || pk || m)` and
//! `s = r + e·x`. Nonces are derived deterministically from a per-key nonce
//! seed and the message.

use blake2::{Blake2b512, Digest};
use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::CompressedRistretto;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::byte_newtype;
use crate::primitives::wire::Tag;

const KEY_TAG: &[u8] = b"vldp/schnorr/key";
const NONCE_TAG: &[u8] = b"vldp/schnorr/nonce";
const CHALLENGE_TAG: &[u8] = b"vldp/schnorr/challenge";

byte_newtype!(
    /// Compressed ristretto255 public key.
    PublicKey,
    32,
    Tag::PublicKey
);

byte_newtype!(
    /// `R || s`.
    Signature,
    64,
    Tag::Signature
);

/// Secret/public key pair. The secret is derived from a 32-byte seed, which is
/// the only thing that needs to be stored.
#[derive(Clone)]
pub struct SigningKeyPair {
    seed: [u8; 32],
    secret: Scalar,
    nonce_seed: [u8; 32],
    public: PublicKey,
}

impl std::fmt::Debug for SigningKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigningKeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl SigningKeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        let wide: [u8; 64] = Blake2b512::new()
            .chain_update(KEY_TAG)
            .chain_update(seed)
            .finalize()
            .into();
        let mut scalar_bytes = [0u8; 64];
        scalar_bytes[..32].copy_from_slice(&wide[..32]);
        let secret = Scalar::from_bytes_mod_order_wide(&scalar_bytes);
        let mut nonce_seed = [0u8; 32];
        nonce_seed.copy_from_slice(&wide[32..]);
        let public = PublicKey((secret * RISTRETTO_BASEPOINT_POINT).compress().to_bytes());
        Self {
            seed,
            secret,
            nonce_seed,
            public,
        }
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        let r = Scalar::from_hash(
            Blake2b512::new()
                .chain_update(NONCE_TAG)
                .chain_update(self.nonce_seed)
                .chain_update(message),
        );
        let big_r = (r * RISTRETTO_BASEPOINT_POINT).compress();
        let e = challenge(big_r.as_bytes(), &self.public, message);
        let s = r + e * self.secret;
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(big_r.as_bytes());
        out[32..].copy_from_slice(s.as_bytes());
        Signature(out)
    }
}

fn challenge(r: &[u8; 32], pk: &PublicKey, message: &[u8]) -> Scalar {
    Scalar::from_hash(
        Blake2b512::new()
            .chain_update(CHALLENGE_TAG)
            .chain_update(r)
            .chain_update(pk.0)
            .chain_update(message),
    )
}

/// Verifies `sig` on `message`. Invalid point or scalar encodings yield `false`.
pub fn sig_verify(pk: &PublicKey, sig: &Signature, message: &[u8]) -> bool {
    let Some(public) = CompressedRistretto(pk.0).decompress() else {
        return false;
    };
    let r_bytes: [u8; 32] = sig.0[..32].try_into().expect("32-byte half");
    let s_bytes: [u8; 32] = sig.0[32..].try_into().expect("32-byte half");
    if CompressedRistretto(r_bytes).decompress().is_none() {
        return false;
    }
    let Some(s) = Option::<Scalar>::from(Scalar::from_canonical_bytes(s_bytes)) else {
        return false;
    };
    let e = challenge(&r_bytes, pk, message);
    // s·G - e·P must equal R; compare canonical encodings.
    let lhs = s * RISTRETTO_BASEPOINT_POINT - e * public;
    lhs.compress().to_bytes() == r_bytes
}

/// Like [`sig_verify`] but accepts unparsed signature bytes of any length.
pub fn sig_verify_bytes(pk: &PublicKey, sig: &[u8], message: &[u8]) -> bool {
    match Signature::from_slice(sig) {
        Some(sig) => sig_verify(pk, &sig, message),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn preimage(x: u64, t: u64) -> Vec<u8> {
        [x.to_be_bytes(), t.to_be_bytes()].concat()
    }

    #[test]
    fn round_trip() {
        let kp = SigningKeyPair::generate(&mut ChaCha20Rng::seed_from_u64(3));
        let m = preimage(4, 17);
        assert!(sig_verify(&kp.public(), &kp.sign(&m), &m));
    }

    #[test]
    fn other_key_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = SigningKeyPair::generate(&mut rng);
        let b = SigningKeyPair::generate(&mut rng);
        let m = preimage(1, 2);
        assert!(!sig_verify(&b.public(), &a.sign(&m), &m));
    }

    #[test]
    fn every_single_byte_message_mutation_fails() {
        let kp = SigningKeyPair::from_seed([5; 32]);
        let m = preimage(9, 99);
        let sig = kp.sign(&m);
        for i in 0..m.len() {
            let mut m2 = m.clone();
            m2[i] ^= 0x01;
            assert!(!sig_verify(&kp.public(), &sig, &m2), "byte {i}");
        }
    }

    #[test]
    fn truncated_or_garbage_signature_is_rejected() {
        let kp = SigningKeyPair::from_seed([6; 32]);
        let m = b"msg";
        let sig = kp.sign(m);
        assert!(!sig_verify_bytes(&kp.public(), &sig.0[..63], m));
        assert!(!sig_verify_bytes(&kp.public(), &[], m));
        assert!(!sig_verify(&kp.public(), &Signature([0xff; 64]), m));
        assert!(!sig_verify(&PublicKey([0xff; 32]), &sig, m));
    }

    #[test]
    fn seed_reproduces_key() {
        let kp = SigningKeyPair::from_seed([8; 32]);
        let again = SigningKeyPair::from_seed(*kp.seed());
        assert_eq!(kp.public(), again.public());
        assert_eq!(kp.sign(b"m"), again.sign(b"m"));
    }
}
