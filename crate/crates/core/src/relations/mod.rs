//! The Base, Expand and Shuffle relations as total predicates over
//! (statement, witness), plus the proof-system interface in [`proof`].

pub mod proof;

use crate::ldp::{LdpValue, RandomTape, Randomizer, RandomizerConfig};
use crate::primitives::{
    byte_newtype, merkle_verify, Blinding, prf_stream, sig_verify, xor_bytes, Commitment, CommitmentScheme, MerklePath,
    MerkleRoot, PrfKey, PrfOutput, PublicKey, Reader, Signature, Tag, Wire, WireError, Writer,
};

pub use proof::{
    backend, BackendId, DirectCheck, EvaluationKey, Proof, ProofError, ProofSystem, SnarkSeam, Trapdoor,
    VerificationKey,
};

/// Integer clock tick.
pub type Timestamp = u64;

byte_newtype!(
    /// Public per-interval seed `s_j`.
    Seed,
    32,
    Tag::Seed
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationId {
    Base,
    Expand,
    Shuffle,
}

impl RelationId {
    pub const ALL: [RelationId; 3] = [RelationId::Base, RelationId::Expand, RelationId::Shuffle];

    pub fn id(self) -> u8 {
        match self {
            RelationId::Base => 1,
            RelationId::Expand => 2,
            RelationId::Shuffle => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationId::Base => "base",
            RelationId::Expand => "expand",
            RelationId::Shuffle => "shuffle",
        }
    }
}

impl std::fmt::Display for RelationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RelationId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Everything a relation check needs besides the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationParams {
    pub randomizer: RandomizerConfig,
    pub commitment: CommitmentScheme,
}

impl RelationParams {
    pub fn new(randomizer: RandomizerConfig) -> Self {
        Self {
            randomizer,
            commitment: CommitmentScheme::Hash,
        }
    }

    pub fn tape_len(&self) -> usize {
        self.randomizer.required_tape_bytes()
    }
}

impl Wire for RelationParams {
    const TAG: Tag = Tag::RelationParams;

    fn write_body(&self, w: &mut Writer) {
        w.put_object(&self.randomizer);
        w.put_u8(self.commitment.id());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let randomizer = r.get_object()?;
        let commitment = CommitmentScheme::from_id(r.get_u8()?).ok_or(WireError::Invalid("commitment scheme"))?;
        Ok(Self { randomizer, commitment })
    }
}

/// Preimage signed by the trusted environment: `x || t_x`, both 8-byte big-endian.
pub fn signed_input_preimage(x: u64, t_x: Timestamp) -> [u8; 16] {
    let mut out = [0u8; 16];
    out[..8].copy_from_slice(&x.to_be_bytes());
    out[8..].copy_from_slice(&t_x.to_be_bytes());
    out
}

/// Server signature preimage in Base: `pk_i || cm || k_s || t_j`.
pub fn sigma_s_preimage_base(pk: &PublicKey, cm: &Commitment, k_s: &PrfKey, t_j: Timestamp) -> Vec<u8> {
    [&pk.0[..], &cm.0, &k_s.0, &t_j.to_be_bytes()].concat()
}

/// Server signature preimage in Expand: `pk_i || rt_i || k_s`.
pub fn sigma_s_preimage_expand(pk: &PublicKey, root: &MerkleRoot, k_s: &PrfKey) -> Vec<u8> {
    [&pk.0[..], &root.0, &k_s.0].concat()
}

/// Server signature preimage in Shuffle: `pk_i || cm_kc || k_s`.
pub fn sigma_s_preimage_shuffle(pk: &PublicKey, cm_kc: &Commitment, k_s: &PrfKey) -> Vec<u8> {
    [&pk.0[..], &cm_kc.0, &k_s.0].concat()
}

/// `t_prev < t_x <= t_j`.
pub fn in_window(t_prev: Timestamp, t_x: Timestamp, t_j: Timestamp) -> bool {
    t_prev < t_x && t_x <= t_j
}

/// Tape `(rho_c XOR rho_s)` truncated to the randomizer's demand.
pub fn xor_tape(rho_c: &PrfOutput, rho_s: &PrfOutput, len: usize) -> Option<Vec<u8>> {
    (len <= PrfOutput::LEN).then(|| xor_bytes(&rho_c.0[..len], &rho_s.0[..len]))
}

/// Tape `prf(k, s_j)`, extended by counter when one block is not enough.
pub fn seeded_tape(k: &PrfKey, seed: &Seed, len: usize) -> Vec<u8> {
    prf_stream(k, &seed.0, len)
}

fn randomizes_to(config: &RandomizerConfig, x: u64, tape: Vec<u8>, x_tilde: LdpValue) -> bool {
    matches!(config.apply(x, &mut RandomTape::new(tape)), Ok(v) if v == x_tilde)
}

macro_rules! fields {
    ($($name:literal),* $(,)?) => {
        /// Field names, for auditing which symbols are public.
        pub const FIELDS: &'static [&'static str] = &[$($name),*];
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementBase {
    pub t_prev: Timestamp,
    pub t_j: Timestamp,
    pub pk: PublicKey,
    pub cm_rho_c: Commitment,
    pub rho_s: PrfOutput,
    pub x_tilde: LdpValue,
}

impl StatementBase {
    fields!("t_prev", "t_j", "pk_i", "cm_rho_c", "rho_s", "x_tilde");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessBase {
    pub t_x: Timestamp,
    pub x: u64,
    pub sigma_x: Signature,
    pub rho_c: PrfOutput,
    pub r_rho_c: Blinding,
}

impl WitnessBase {
    fields!("t_x", "x", "sigma_x", "rho_c", "r_rho_c");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementExpand {
    pub t_prev: Timestamp,
    pub t_j: Timestamp,
    /// 1-based interval index; the opened leaf is `j - 1`.
    pub j: u32,
    pub pk: PublicKey,
    pub root: MerkleRoot,
    pub rho_s: PrfOutput,
    pub x_tilde: LdpValue,
}

impl StatementExpand {
    fields!("t_prev", "t_j", "j", "pk_i", "rt_i", "rho_s", "x_tilde");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessExpand {
    pub t_x: Timestamp,
    pub x: u64,
    pub sigma_x: Signature,
    pub rho_c: PrfOutput,
    pub r_rho_c: Blinding,
    pub cm_rho_c: Commitment,
    pub path: MerklePath,
    pub leaf_index: u32,
}

impl WitnessExpand {
    fields!("t_x", "x", "sigma_x", "rho_c", "r_rho_c", "cm_rho_c", "merkle_path", "leaf_index");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementShuffle {
    pub t_prev: Timestamp,
    pub t_j: Timestamp,
    pub pk_s: PublicKey,
    pub seed: Seed,
    pub x_tilde: LdpValue,
}

impl StatementShuffle {
    fields!("t_prev", "t_j", "pk_s", "s_j", "x_tilde");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessShuffle {
    pub t_x: Timestamp,
    pub x: u64,
    pub pk: PublicKey,
    pub sigma_x: Signature,
    pub k_c: PrfKey,
    pub r_kc: Blinding,
    pub cm_kc: Commitment,
    pub k_s: PrfKey,
    pub sigma_s: Signature,
}

impl WitnessShuffle {
    fields!("t_x", "x", "pk_i", "sigma_x", "k_c", "r_kc", "cm_kc", "k_s", "sigma_s");
}

/// Base relation: window, input signature, commitment to `rho_c`, and
/// `x_tilde = R(x; rho_c XOR rho_s)`.
pub fn check_base(phi: &StatementBase, w: &WitnessBase, params: &RelationParams) -> bool {
    in_window(phi.t_prev, w.t_x, phi.t_j)
        && sig_verify(&phi.pk, &w.sigma_x, &signed_input_preimage(w.x, w.t_x))
        && params.commitment.verify(&phi.cm_rho_c, &w.rho_c.0, &w.r_rho_c)
        && match xor_tape(&w.rho_c, &phi.rho_s, params.tape_len()) {
            Some(tape) => randomizes_to(&params.randomizer, w.x, tape, phi.x_tilde),
            None => false,
        }
}

/// Expand relation: Base's checks with the commitment additionally opened as
/// leaf `j - 1` of the tree with root `rt_i`.
pub fn check_expand(phi: &StatementExpand, w: &WitnessExpand, params: &RelationParams) -> bool {
    phi.j >= 1
        && w.leaf_index == phi.j - 1
        && in_window(phi.t_prev, w.t_x, phi.t_j)
        && sig_verify(&phi.pk, &w.sigma_x, &signed_input_preimage(w.x, w.t_x))
        && params.commitment.verify(&w.cm_rho_c, &w.rho_c.0, &w.r_rho_c)
        && merkle_verify(&phi.root, &w.cm_rho_c, w.leaf_index as usize, &w.path)
        && match xor_tape(&w.rho_c, &phi.rho_s, params.tape_len()) {
            Some(tape) => randomizes_to(&params.randomizer, w.x, tape, phi.x_tilde),
            None => false,
        }
}

/// Shuffle relation: window, input signature, commitment to `k_c`, server
/// signature over `pk_i || cm_kc || k_s`, and `x_tilde = R(x; prf(k_c XOR k_s, s_j))`.
pub fn check_shuffle(phi: &StatementShuffle, w: &WitnessShuffle, params: &RelationParams) -> bool {
    in_window(phi.t_prev, w.t_x, phi.t_j)
        && sig_verify(&w.pk, &w.sigma_x, &signed_input_preimage(w.x, w.t_x))
        && params.commitment.verify(&w.cm_kc, &w.k_c.0, &w.r_kc)
        && sig_verify(&phi.pk_s, &w.sigma_s, &sigma_s_preimage_shuffle(&w.pk, &w.cm_kc, &w.k_s))
        && randomizes_to(
            &params.randomizer,
            w.x,
            seeded_tape(&w.k_c.xor(&w.k_s), &phi.seed, params.tape_len()),
            phi.x_tilde,
        )
}

/// Public statement of any relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Base(StatementBase),
    Expand(StatementExpand),
    Shuffle(StatementShuffle),
}

/// Secret witness of any relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Base(WitnessBase),
    Expand(WitnessExpand),
    Shuffle(WitnessShuffle),
}

impl Statement {
    pub fn relation(&self) -> RelationId {
        match self {
            Statement::Base(_) => RelationId::Base,
            Statement::Expand(_) => RelationId::Expand,
            Statement::Shuffle(_) => RelationId::Shuffle,
        }
    }

    pub fn x_tilde(&self) -> LdpValue {
        match self {
            Statement::Base(s) => s.x_tilde,
            Statement::Expand(s) => s.x_tilde,
            Statement::Shuffle(s) => s.x_tilde,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Statement::Base(s) => s.to_bytes(),
            Statement::Expand(s) => s.to_bytes(),
            Statement::Shuffle(s) => s.to_bytes(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        match bytes.first().copied() {
            Some(t) if t == Tag::StatementBase.byte() => StatementBase::from_bytes(bytes).map(Statement::Base),
            Some(t) if t == Tag::StatementExpand.byte() => StatementExpand::from_bytes(bytes).map(Statement::Expand),
            Some(t) if t == Tag::StatementShuffle.byte() => {
                StatementShuffle::from_bytes(bytes).map(Statement::Shuffle)
            }
            Some(_) => Err(WireError::Invalid("statement tag")),
            None => Err(WireError::Truncated { needed: 1 }),
        }
    }
}

impl Witness {
    pub fn relation(&self) -> RelationId {
        match self {
            Witness::Base(_) => RelationId::Base,
            Witness::Expand(_) => RelationId::Expand,
            Witness::Shuffle(_) => RelationId::Shuffle,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Witness::Base(w) => w.to_bytes(),
            Witness::Expand(w) => w.to_bytes(),
            Witness::Shuffle(w) => w.to_bytes(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        match bytes.first().copied() {
            Some(t) if t == Tag::WitnessBase.byte() => WitnessBase::from_bytes(bytes).map(Witness::Base),
            Some(t) if t == Tag::WitnessExpand.byte() => WitnessExpand::from_bytes(bytes).map(Witness::Expand),
            Some(t) if t == Tag::WitnessShuffle.byte() => WitnessShuffle::from_bytes(bytes).map(Witness::Shuffle),
            Some(_) => Err(WireError::Invalid("witness tag")),
            None => Err(WireError::Truncated { needed: 1 }),
        }
    }
}

/// Dispatches to the matching relation; mismatched variants are `false`.
pub fn check(phi: &Statement, w: &Witness, params: &RelationParams) -> bool {
    match (phi, w) {
        (Statement::Base(s), Witness::Base(w)) => check_base(s, w, params),
        (Statement::Expand(s), Witness::Expand(w)) => check_expand(s, w, params),
        (Statement::Shuffle(s), Witness::Shuffle(w)) => check_shuffle(s, w, params),
        _ => false,
    }
}

impl Wire for StatementBase {
    const TAG: Tag = Tag::StatementBase;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_prev);
        w.put_u64(self.t_j);
        w.put_bytes(&self.pk.0);
        w.put_bytes(&self.cm_rho_c.0);
        w.put_bytes(&self.rho_s.0);
        w.put_u64(self.x_tilde.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_prev: r.get_u64()?,
            t_j: r.get_u64()?,
            pk: PublicKey(r.get_array()?),
            cm_rho_c: Commitment(r.get_array()?),
            rho_s: PrfOutput(r.get_array()?),
            x_tilde: LdpValue(r.get_u64()?),
        })
    }
}

impl Wire for WitnessBase {
    const TAG: Tag = Tag::WitnessBase;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_x);
        w.put_u64(self.x);
        w.put_bytes(&self.sigma_x.0);
        w.put_bytes(&self.rho_c.0);
        w.put_bytes(&self.r_rho_c.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_x: r.get_u64()?,
            x: r.get_u64()?,
            sigma_x: Signature(r.get_array()?),
            rho_c: PrfOutput(r.get_array()?),
            r_rho_c: Blinding(r.get_array()?),
        })
    }
}

impl Wire for StatementExpand {
    const TAG: Tag = Tag::StatementExpand;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_prev);
        w.put_u64(self.t_j);
        w.put_u32(self.j);
        w.put_bytes(&self.pk.0);
        w.put_bytes(&self.root.0);
        w.put_bytes(&self.rho_s.0);
        w.put_u64(self.x_tilde.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_prev: r.get_u64()?,
            t_j: r.get_u64()?,
            j: r.get_u32()?,
            pk: PublicKey(r.get_array()?),
            root: MerkleRoot(r.get_array()?),
            rho_s: PrfOutput(r.get_array()?),
            x_tilde: LdpValue(r.get_u64()?),
        })
    }
}

impl Wire for WitnessExpand {
    const TAG: Tag = Tag::WitnessExpand;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_x);
        w.put_u64(self.x);
        w.put_bytes(&self.sigma_x.0);
        w.put_bytes(&self.rho_c.0);
        w.put_bytes(&self.r_rho_c.0);
        w.put_bytes(&self.cm_rho_c.0);
        w.put_object(&self.path);
        w.put_u32(self.leaf_index);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_x: r.get_u64()?,
            x: r.get_u64()?,
            sigma_x: Signature(r.get_array()?),
            rho_c: PrfOutput(r.get_array()?),
            r_rho_c: Blinding(r.get_array()?),
            cm_rho_c: Commitment(r.get_array()?),
            path: r.get_object()?,
            leaf_index: r.get_u32()?,
        })
    }
}

impl Wire for StatementShuffle {
    const TAG: Tag = Tag::StatementShuffle;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_prev);
        w.put_u64(self.t_j);
        w.put_bytes(&self.pk_s.0);
        w.put_bytes(&self.seed.0);
        w.put_u64(self.x_tilde.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_prev: r.get_u64()?,
            t_j: r.get_u64()?,
            pk_s: PublicKey(r.get_array()?),
            seed: Seed(r.get_array()?),
            x_tilde: LdpValue(r.get_u64()?),
        })
    }
}

impl Wire for WitnessShuffle {
    const TAG: Tag = Tag::WitnessShuffle;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.t_x);
        w.put_u64(self.x);
        w.put_bytes(&self.pk.0);
        w.put_bytes(&self.sigma_x.0);
        w.put_bytes(&self.k_c.0);
        w.put_bytes(&self.r_kc.0);
        w.put_bytes(&self.cm_kc.0);
        w.put_bytes(&self.k_s.0);
        w.put_bytes(&self.sigma_s.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            t_x: r.get_u64()?,
            x: r.get_u64()?,
            pk: PublicKey(r.get_array()?),
            sigma_x: Signature(r.get_array()?),
            k_c: PrfKey(r.get_array()?),
            r_kc: Blinding(r.get_array()?),
            cm_kc: Commitment(r.get_array()?),
            k_s: PrfKey(r.get_array()?),
            sigma_s: Signature(r.get_array()?),
        })
    }
}
