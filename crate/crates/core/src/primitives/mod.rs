//! Deterministic cryptographic building blocks.

pub mod commitment;
pub mod merkle;
pub mod prf;
pub mod signature;
pub mod wire;

use thiserror::Error;

pub use commitment::{commit, commit_verify, Blinding, Commitment, CommitmentScheme};
pub use merkle::{depth_for_leaves, merkle_build, merkle_verify, MerklePath, MerkleRoot, MerkleTree, MAX_DEPTH};
pub use prf::{hash, prf_eval, prf_stream, prg_expand, PrfKey, PrfOutput};
pub use signature::{sig_verify, sig_verify_bytes, PublicKey, Signature, SigningKeyPair};
pub use wire::{Reader, Tag, Wire, WireError, Writer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrimitiveError {
    #[error("prg input {0} repeats an earlier input")]
    DuplicatePrgInput(usize),
    #[error("merkle index {index} outside tree of {capacity} leaves")]
    MerkleIndexOutOfRange { index: usize, capacity: usize },
    #[error("{leaves} leaves do not fit a depth-{depth} tree")]
    MerkleDepthTooSmall { leaves: usize, depth: u8 },
    #[error("merkle depth must be in 1..={max}, got {depth}")]
    MerkleDepthInvalid { depth: u8, max: u8 },
    #[error("merkle tree needs at least one leaf")]
    EmptyTree,
}

/// Fixed-width byte newtype with hex `Debug` and a framed encoding.
macro_rules! byte_newtype {
    ($(#[$meta:meta])* $name:ident, $len:expr, $tag:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                <[u8; $len]>::try_from(bytes).ok().map(Self)
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl std::fmt::Debug for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}({})", stringify!($name), hex::encode(self.0))
            }
        }

        impl $crate::primitives::wire::Wire for $name {
            const TAG: $crate::primitives::wire::Tag = $tag;

            fn write_body(&self, w: &mut $crate::primitives::wire::Writer) {
                w.put_bytes(&self.0);
            }

            fn read_body(
                r: &mut $crate::primitives::wire::Reader<'_>,
            ) -> Result<Self, $crate::primitives::wire::WireError> {
                Ok(Self(r.get_array()?))
            }
        }
    };
}

pub(crate) use byte_newtype;

/// XOR of two equal-length byte strings.
pub fn xor_bytes(a: &[u8], b: &[u8]) -> Vec<u8> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
