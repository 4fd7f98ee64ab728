//! Base, Expand and Shuffle protocol machines: setup, server key generation,
//! the three-message GenRand exchange, randomization and verification.

mod client;
mod messages;
mod server;

use std::collections::HashSet;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::ldp::{LdpError, Randomizer, RandomizerConfig};
use crate::primitives::{depth_for_leaves, PrimitiveError, Reader, Tag, Wire, WireError, Writer, MAX_DEPTH};
use crate::relations::{BackendId, ProofError, RelationParams, Seed, Timestamp};

pub use crate::relations::RelationId as Scheme;
pub use client::{
    base_server_randomness, derive_tape, genrand_request, instance, public_values, randomize, GenRandPending,
    RandomnessBundle, SignedInput, TrustedEnvironment,
};
pub use messages::{GenRandRequest, GenRandResponse, PublicValues, RandomizeOutput};
pub use server::{keygen, Rejection, ServerState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("time grid must have at least two strictly increasing ticks")]
    BadGrid,
    #[error("interval {j} outside 1..={t}")]
    BadInterval { j: u32, t: u32 },
    #[error("t_x = {t_x} outside ({t_prev}, {t_j}]")]
    OutsideWindow { t_x: Timestamp, t_prev: Timestamp, t_j: Timestamp },
    #[error("t_x = {t_x} is not after the last signed tick {last}")]
    ClockRegression { t_x: Timestamp, last: Timestamp },
    #[error("merkle depth {depth} cannot hold {intervals} intervals")]
    DepthTooSmall { depth: u8, intervals: u32 },
    #[error("merkle depth is only configurable for the expand scheme")]
    DepthNotApplicable,
    #[error("public seeds collided")]
    SeedCollision,
    #[error("bundle or message belongs to another scheme or interval")]
    Mismatch,
    #[error("server aborted: {0}")]
    Rejected(Rejection),
    #[error(transparent)]
    Ldp(#[from] LdpError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
}

/// Interval boundaries `t_0 < t_1 < ... < t_T`; interval `j` is `(t_{j-1}, t_j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeGrid(Vec<Timestamp>);

impl TimeGrid {
    pub fn new(ticks: Vec<Timestamp>) -> Result<Self, ProtocolError> {
        if ticks.len() < 2 || ticks.len() > u16::MAX as usize || ticks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ProtocolError::BadGrid);
        }
        Ok(Self(ticks))
    }

    /// `t_j = j * step` for `j = 0..=intervals`.
    pub fn uniform(intervals: u32, step: Timestamp) -> Result<Self, ProtocolError> {
        Self::new((0..=intervals as u64).map(|j| j * step).collect())
    }

    pub fn ticks(&self) -> &[Timestamp] {
        &self.0
    }

    /// Number of intervals `T`.
    pub fn intervals(&self) -> u32 {
        (self.0.len() - 1) as u32
    }

    pub fn check_interval(&self, j: u32) -> Result<(), ProtocolError> {
        if j == 0 || j > self.intervals() {
            return Err(ProtocolError::BadInterval { j, t: self.intervals() });
        }
        Ok(())
    }

    /// `(t_{j-1}, t_j)` for `1 <= j <= T`.
    pub fn window(&self, j: u32) -> Result<(Timestamp, Timestamp), ProtocolError> {
        self.check_interval(j)?;
        Ok((self.0[j as usize - 1], self.0[j as usize]))
    }

    /// Index `j >= 1` with `t_j == t`.
    pub fn index_of(&self, t: Timestamp) -> Option<u32> {
        self.0.iter().skip(1).position(|&x| x == t).map(|i| i as u32 + 1)
    }

    /// Bytes needed to carry any tick of this grid.
    pub fn tick_width(&self) -> usize {
        match self.0.last().copied().unwrap_or(0) {
            t if t <= u8::MAX as u64 => 1,
            t if t <= u16::MAX as u64 => 2,
            t if t <= u32::MAX as u64 => 4,
            _ => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    pub scheme: Scheme,
    pub backend: BackendId,
    pub relation: RelationParams,
    pub grid: TimeGrid,
    /// `s_1..s_T`; empty for Base.
    pub seeds: Vec<Seed>,
    /// Expand only; zero otherwise.
    pub merkle_depth: u8,
}

impl PublicParams {
    pub fn randomizer(&self) -> &RandomizerConfig {
        &self.relation.randomizer
    }

    pub fn intervals(&self) -> u32 {
        self.grid.intervals()
    }

    pub fn seed(&self, j: u32) -> Result<&Seed, ProtocolError> {
        self.grid.check_interval(j)?;
        self.seeds.get(j as usize - 1).ok_or(ProtocolError::Mismatch)
    }

    pub fn tape_len(&self) -> usize {
        self.relation.randomizer.required_tape_bytes()
    }
}

/// Optional knobs for [`setup_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetupOptions {
    pub backend: BackendId,
    pub commitment: crate::primitives::CommitmentScheme,
    /// Expand only. Defaults to the smallest depth holding `T` leaves.
    pub merkle_depth: Option<u8>,
}

impl Default for SetupOptions {
    fn default() -> Self {
        Self {
            backend: BackendId::DirectCheck,
            commitment: crate::primitives::CommitmentScheme::Hash,
            merkle_depth: None,
        }
    }
}

pub fn setup<R: RngCore + CryptoRng>(
    scheme: Scheme,
    grid: TimeGrid,
    randomizer: RandomizerConfig,
    rng: &mut R,
) -> Result<PublicParams, ProtocolError> {
    setup_with(scheme, grid, randomizer, SetupOptions::default(), rng)
}

pub fn setup_with<R: RngCore + CryptoRng>(
    scheme: Scheme,
    grid: TimeGrid,
    randomizer: RandomizerConfig,
    options: SetupOptions,
    rng: &mut R,
) -> Result<PublicParams, ProtocolError> {
    let t = grid.intervals();
    let merkle_depth = match (scheme, options.merkle_depth) {
        (Scheme::Expand, None) => depth_for_leaves(t as usize),
        (Scheme::Expand, Some(d)) => {
            if d == 0 || d > MAX_DEPTH || d < depth_for_leaves(t as usize) {
                return Err(ProtocolError::DepthTooSmall { depth: d, intervals: t });
            }
            d
        }
        (_, Some(_)) => return Err(ProtocolError::DepthNotApplicable),
        (_, None) => 0,
    };
    let seeds = match scheme {
        Scheme::Base => Vec::new(),
        Scheme::Expand | Scheme::Shuffle => {
            let seeds: Vec<Seed> = (0..t)
                .map(|_| {
                    let mut s = [0u8; 32];
                    rng.fill_bytes(&mut s);
                    Seed(s)
                })
                .collect();
            if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
                return Err(ProtocolError::SeedCollision);
            }
            seeds
        }
    };
    Ok(PublicParams {
        scheme,
        backend: options.backend,
        relation: RelationParams {
            randomizer,
            commitment: options.commitment,
        },
        grid,
        seeds,
        merkle_depth,
    })
}

impl Wire for PublicParams {
    const TAG: Tag = Tag::PublicParams;

    fn write_body(&self, w: &mut Writer) {
        w.put_u8(self.scheme.id());
        w.put_u8(self.backend.id());
        w.put_object(&self.relation);
        w.put_u8(self.merkle_depth);
        w.put_u16(self.grid.0.len() as u16);
        for t in &self.grid.0 {
            w.put_u64(*t);
        }
        w.put_u16(self.seeds.len() as u16);
        for s in &self.seeds {
            w.put_bytes(&s.0);
        }
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let scheme = Scheme::from_id(r.get_u8()?).ok_or(WireError::Invalid("scheme"))?;
        let backend = BackendId::from_id(r.get_u8()?).ok_or(WireError::Invalid("backend"))?;
        let relation = r.get_object()?;
        let merkle_depth = r.get_u8()?;
        let n = r.get_u16()? as usize;
        let ticks = (0..n).map(|_| r.get_u64()).collect::<Result<Vec<_>, _>>()?;
        let grid = TimeGrid::new(ticks).map_err(|_| WireError::Invalid("time grid"))?;
        let m = r.get_u16()? as usize;
        let seeds = (0..m).map(|_| r.get_array().map(Seed)).collect::<Result<Vec<_>, _>>()?;
        let expected_seeds = if scheme == Scheme::Base { 0 } else { grid.intervals() as usize };
        if seeds.len() != expected_seeds {
            return Err(WireError::Invalid("seed count"));
        }
        if (scheme == Scheme::Expand) != (merkle_depth > 0)
            || merkle_depth > MAX_DEPTH
            || (scheme == Scheme::Expand && merkle_depth < depth_for_leaves(grid.intervals() as usize))
        {
            return Err(WireError::Invalid("merkle depth"));
        }
        Ok(Self {
            scheme,
            backend,
            relation,
            grid,
            seeds,
            merkle_depth,
        })
    }
}

/// Where an abort can happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Server side of GenRand.
    ServerGenRand,
    /// Client check of the server's GenRand response.
    ClientGenRand,
    /// Server verification of a submission.
    ServerVerify,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::ServerGenRand => "server-genrand",
            Phase::ClientGenRand => "client-genrand",
            Phase::ServerVerify => "server-verify",
        }
    }
}

/// Every abort branch of the three schemes.
pub const ABORT_BRANCHES: &[(Scheme, Phase, Rejection)] = &[
    (Scheme::Base, Phase::ServerGenRand, Rejection::UnknownPk),
    (Scheme::Base, Phase::ServerGenRand, Rejection::BadWindow),
    (Scheme::Base, Phase::ServerGenRand, Rejection::Replay),
    (Scheme::Base, Phase::ClientGenRand, Rejection::BadServerSig),
    (Scheme::Base, Phase::ServerVerify, Rejection::Malformed),
    (Scheme::Base, Phase::ServerVerify, Rejection::BadWindow),
    (Scheme::Base, Phase::ServerVerify, Rejection::UnknownPk),
    (Scheme::Base, Phase::ServerVerify, Rejection::BadServerSig),
    (Scheme::Base, Phase::ServerVerify, Rejection::BadProof),
    (Scheme::Expand, Phase::ServerGenRand, Rejection::UnknownPk),
    (Scheme::Expand, Phase::ServerGenRand, Rejection::Replay),
    (Scheme::Expand, Phase::ClientGenRand, Rejection::BadServerSig),
    (Scheme::Expand, Phase::ServerVerify, Rejection::Malformed),
    (Scheme::Expand, Phase::ServerVerify, Rejection::BadWindow),
    (Scheme::Expand, Phase::ServerVerify, Rejection::UnknownPk),
    (Scheme::Expand, Phase::ServerVerify, Rejection::BadServerSig),
    (Scheme::Expand, Phase::ServerVerify, Rejection::BadProof),
    (Scheme::Shuffle, Phase::ServerGenRand, Rejection::UnknownPk),
    (Scheme::Shuffle, Phase::ServerGenRand, Rejection::Replay),
    (Scheme::Shuffle, Phase::ClientGenRand, Rejection::BadServerSig),
    (Scheme::Shuffle, Phase::ServerVerify, Rejection::Malformed),
    (Scheme::Shuffle, Phase::ServerVerify, Rejection::BadWindow),
    (Scheme::Shuffle, Phase::ServerVerify, Rejection::BadProof),
];
