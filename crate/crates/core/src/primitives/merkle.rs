//! Fixed-depth binary Merkle trees over commitments.
//!
//! A tree of depth `d` has `2^(d-1)` leaves; depth 1 is a single leaf that is
//! also the root. Leaf digests are `H(0x00 || cm)` and internal nodes are
//! `H(0x01 || left || right)`. Unused leaves hold the all-zero commitment.

use super::byte_newtype;
use super::commitment::Commitment;
use super::prf::hash;
use super::PrimitiveError;
use crate::primitives::wire::{Reader, Tag, Wire, WireError, Writer};

const LEAF_PREFIX: u8 = 0x00;
const NODE_PREFIX: u8 = 0x01;

/// Deepest supported tree (2^31 leaves).
pub const MAX_DEPTH: u8 = 32;

/// Filler for leaf positions beyond the real commitments.
pub const PADDING_LEAF: Commitment = Commitment([0u8; 32]);

byte_newtype!(
    /// Root digest.
    MerkleRoot,
    32,
    Tag::MerkleRoot
);

pub fn leaf_digest(cm: &Commitment) -> [u8; 32] {
    hash(&[&[LEAF_PREFIX], &cm.0])
}

pub fn node_digest(left: &[u8; 32], right: &[u8; 32]) -> [u8; 32] {
    hash(&[&[NODE_PREFIX], left, right])
}

/// Smallest depth `d` with `2^(d-1) >= leaves`.
pub fn depth_for_leaves(leaves: usize) -> u8 {
    let mut d = 1u8;
    while (1usize << (d - 1)) < leaves {
        d += 1;
    }
    d
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    depth: u8,
    /// `levels[0]` holds leaf digests, the last level holds the root.
    levels: Vec<Vec<[u8; 32]>>,
    leaves: Vec<Commitment>,
}

/// Sibling digests from the leaf level upwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerklePath {
    pub siblings: Vec<[u8; 32]>,
}

pub fn merkle_build(leaves: &[Commitment], depth: u8) -> Result<MerkleTree, PrimitiveError> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(PrimitiveError::MerkleDepthInvalid {
            depth,
            max: MAX_DEPTH,
        });
    }
    if leaves.is_empty() {
        return Err(PrimitiveError::EmptyTree);
    }
    let capacity = 1usize << (depth - 1);
    if leaves.len() > capacity {
        return Err(PrimitiveError::MerkleDepthTooSmall {
            leaves: leaves.len(),
            depth,
        });
    }

    let mut padded = leaves.to_vec();
    padded.resize(capacity, PADDING_LEAF);
    let mut levels = vec![padded.iter().map(leaf_digest).collect::<Vec<_>>()];
    while levels.last().map_or(0, Vec::len) > 1 {
        let next = levels
            .last()
            .unwrap()
            .chunks_exact(2)
            .map(|pair| node_digest(&pair[0], &pair[1]))
            .collect();
        levels.push(next);
    }
    Ok(MerkleTree {
        depth,
        levels,
        leaves: padded,
    })
}

impl MerkleTree {
    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn capacity(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> MerkleRoot {
        MerkleRoot(self.levels.last().expect("non-empty")[0])
    }

    pub fn leaf(&self, index: usize) -> Option<&Commitment> {
        self.leaves.get(index)
    }

    pub fn path(&self, index: usize) -> Result<MerklePath, PrimitiveError> {
        if index >= self.capacity() {
            return Err(PrimitiveError::MerkleIndexOutOfRange {
                index,
                capacity: self.capacity(),
            });
        }
        let mut idx = index;
        let siblings = self.levels[..self.levels.len() - 1]
            .iter()
            .map(|level| {
                let s = level[idx ^ 1];
                idx >>= 1;
                s
            })
            .collect();
        Ok(MerklePath { siblings })
    }
}

/// Recomputes the root from `leaf` at `index` and compares. The tree depth is
/// implied by the path length.
pub fn merkle_verify(root: &MerkleRoot, leaf: &Commitment, index: usize, path: &MerklePath) -> bool {
    if path.siblings.len() >= MAX_DEPTH as usize || index >> path.siblings.len() != 0 {
        return false;
    }
    let mut acc = leaf_digest(leaf);
    let mut idx = index;
    for sibling in &path.siblings {
        acc = if idx & 1 == 0 {
            node_digest(&acc, sibling)
        } else {
            node_digest(sibling, &acc)
        };
        idx >>= 1;
    }
    acc == root.0
}

impl Wire for MerklePath {
    const TAG: Tag = Tag::MerklePath;

    fn write_body(&self, w: &mut Writer) {
        w.put_u8(self.siblings.len() as u8);
        for s in &self.siblings {
            w.put_bytes(s);
        }
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let n = r.get_u8()? as usize;
        if n >= MAX_DEPTH as usize {
            return Err(WireError::Invalid("merkle path too long"));
        }
        let siblings = (0..n).map(|_| r.get_array()).collect::<Result<_, _>>()?;
        Ok(MerklePath { siblings })
    }
}
