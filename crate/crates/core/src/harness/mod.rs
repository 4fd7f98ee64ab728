//! Executable security experiments and a catalog of manipulation attacks.

mod attacks;
mod experiments;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::ldp::{LdpError, Probability, RandomizerConfig};
use crate::protocol::{
    genrand_request, keygen, setup_with, ProtocolError, PublicParams, RandomnessBundle, Scheme, ServerState, SetupOptions, SignedInput,
    TimeGrid, TrustedEnvironment,
};
use crate::relations::{BackendId, ProofError, RelationId, Timestamp};

pub use attacks::{attack_catalog, run_attack, AttackKind, AttackOutcome, AttackSpec};
pub use experiments::{
    exp_completeness, exp_completeness_with, exp_shuffle_ind, exp_soundness, exp_zero_knowledge, honest_distribution,
    uncovered_branches, DistributionCheck,
};
pub use report::{ExperimentReport, Status};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("backend `{0}` cannot satisfy zero knowledge; only the structural subset runs")]
    BackendCannotSatisfyZk(BackendId),
    #[error("attack catalog is empty")]
    EmptyCatalog,
    #[error("experiment needs at least one client and one interval")]
    EmptyExperiment,
    #[error("attack `{attack}` does not target the {scheme} scheme")]
    NotTargeted { attack: &'static str, scheme: RelationId },
    #[error("chi-square needs at least two categories with positive mass")]
    DegenerateDistribution,
    #[error("report line {line}: {reason}")]
    ReportParse { line: usize, reason: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Ldp(#[from] LdpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Spacing of the uniform time grid used by the experiments.
pub const GRID_STEP: Timestamp = 10;

/// Histogram randomizer with `k = 4`, `gamma = 1/2`.
pub fn default_randomizer() -> RandomizerConfig {
    RandomizerConfig::histogram(4, Probability::new(1, 2).expect("valid")).expect("valid")
}

/// Derives an independent generator for sub-task `stream` of a seeded run.
pub fn sub_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Public parameters, a server with its allow-list, registered clients and
/// one unregistered device, all derived from one seed.
pub struct Fixture {
    pub pp: PublicParams,
    pub server: ServerState,
    pub clients: Vec<TrustedEnvironment>,
    pub outsider: TrustedEnvironment,
    pub rng: ChaCha20Rng,
}

impl Fixture {
    pub fn new(
        scheme: Scheme,
        clients: usize,
        intervals: u32,
        randomizer: RandomizerConfig,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        Self::with_options(scheme, clients, intervals, randomizer, SetupOptions::default(), seed)
    }

    pub fn with_options(
        scheme: Scheme,
        clients: usize,
        intervals: u32,
        randomizer: RandomizerConfig,
        options: SetupOptions,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if clients == 0 || intervals == 0 {
            return Err(HarnessError::EmptyExperiment);
        }
        let mut rng = sub_rng(seed, 0);
        let grid = TimeGrid::uniform(intervals, GRID_STEP)?;
        let pp = setup_with(scheme, grid, randomizer, options, &mut rng)?;
        let clients: Vec<_> = (0..clients)
            .map(|_| TrustedEnvironment::generate(&mut rng, randomizer))
            .collect();
        let outsider = TrustedEnvironment::generate(&mut rng, randomizer);
        let server = keygen(&pp, clients.iter().map(|c| c.public()), &mut rng)?;
        Ok(Self {
            pp,
            server,
            clients,
            outsider,
            rng,
        })
    }

    /// Complete GenRand run for client `i`. `j` is only used by Base.
    pub fn genrand(&mut self, i: usize, j: u32) -> Result<RandomnessBundle, ProtocolError> {
        genrand_for(&self.pp, &self.server, self.clients[i].public(), j, &mut self.rng)
    }

    /// Client `i` signs `x` at the first tick after `t_{j-1}`.
    pub fn sign_in_window(&mut self, i: usize, j: u32, x: u64) -> Result<SignedInput, ProtocolError> {
        let (t_prev, _) = self.pp.grid.window(j)?;
        self.clients[i].sign(x, t_prev + 1)
    }
}

/// GenRand between `pk` and `server`, with the honest client check.
pub fn genrand_for(
    pp: &PublicParams,
    server: &ServerState,
    pk: crate::primitives::PublicKey,
    j: u32,
    rng: &mut ChaCha20Rng,
) -> Result<RandomnessBundle, ProtocolError> {
    let j = (pp.scheme == Scheme::Base).then_some(j);
    let (pending, req) = genrand_request(pp, pk, j, rng)?;
    let resp = server.handle_genrand(&req, rng).map_err(ProtocolError::Rejected)?;
    pending.finish(&server.pk_s(), &resp)
}

/// Pearson chi-square goodness of fit. Categories whose expected count is
/// below five are pooled into one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub alpha: f64,
}

impl ChiSquare {
    pub fn pass(&self) -> bool {
        self.statistic <= self.critical
    }
}

pub fn chi_square(observed: &[u64], masses: &[f64], alpha: f64) -> Result<ChiSquare, HarnessError> {
    assert_eq!(observed.len(), masses.len(), "one mass per category");
    let n: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    let mut impossible = 0u64;
    for (&o, &m) in observed.iter().zip(masses) {
        let e = m * n as f64;
        if m <= 0.0 {
            impossible += o;
        } else if e < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        bins.push((pooled_obs, pooled_exp));
    }
    if bins.len() < 2 {
        return Err(HarnessError::DegenerateDistribution);
    }
    let dof = bins.len() - 1;
    let critical = ChiSquared::new(dof as f64)
        .map_err(|_| HarnessError::DegenerateDistribution)?
        .inverse_cdf(1.0 - alpha);
    let statistic = if impossible > 0 {
        f64::INFINITY
    } else {
        bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum()
    };
    Ok(ChiSquare {
        statistic,
        dof,
        critical,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_critical_values() {
        // df = 23 at alpha = 0.01 is 41.638 in standard tables.
        let c = chi_square(&[10; 24], &[1.0 / 24.0; 24], 0.01).unwrap();
        assert_eq!(c.dof, 23);
        assert!((c.critical - 41.638).abs() < 1e-3);
        assert_eq!(c.statistic, 0.0);
        assert!(c.pass());
    }

    #[test]
    fn chi_square_flags_impossible_outcomes() {
        let c = chi_square(&[50, 50, 1], &[0.5, 0.5, 0.0], 0.01).unwrap();
        assert!(!c.pass());
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        let c = chi_square(&[990, 4, 4, 2], &[0.99, 0.004, 0.004, 0.002], 0.01).unwrap();
        assert_eq!(c.dof, 1);
    }
}
