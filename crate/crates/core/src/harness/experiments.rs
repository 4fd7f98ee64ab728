//! Completeness, soundness, shuffle indistinguishability and zero knowledge.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::{
    chi_square, default_randomizer, genrand_for, run_attack, sub_rng, AttackSpec, ChiSquare, ExperimentReport,
    Fixture, HarnessError, Status,
};
use crate::ldp::{masses, LdpValue, RandomizerConfig, Randomizer};
use crate::protocol::{
    instance, randomize, Phase, RandomizeOutput, Rejection, Scheme, SetupOptions, ABORT_BRANCHES,
};
use crate::relations::{BackendId, Proof, Timestamp};
use crate::shuffler::Shuffler;

/// Stream ids for [`sub_rng`]; per-client streams start at `CLIENT_STREAM`.
const CHOICE_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const CLIENT_STREAM: u64 = 1 << 32;

/// Runs every client honestly over every interval. `inputs[i][j-1]` is the
/// `(x, t_x)` of client `i` in interval `j`. Returns verdicts per interval.
fn run_honest(
    fx: &mut Fixture,
    inputs: &[Vec<(u64, Timestamp)>],
    seed: u64,
) -> Result<Vec<Vec<Result<LdpValue, Rejection>>>, HarnessError> {
    let Fixture { pp, server, clients, .. } = fx;
    let t = pp.intervals();
    let outputs: Vec<Vec<RandomizeOutput>> = clients
        .par_iter_mut()
        .zip(inputs)
        .enumerate()
        .map(|(i, (te, row))| -> Result<_, HarnessError> {
            let mut rng = sub_rng(seed, CLIENT_STREAM + i as u64);
            let mut bundle = None;
            let mut outs = Vec::with_capacity(t as usize);
            for j in 1..=t {
                if bundle.is_none() || pp.scheme == Scheme::Base {
                    bundle = Some(genrand_for(pp, server, te.public(), j, &mut rng)?);
                }
                let (x, t_x) = row[j as usize - 1];
                let input = te.sign(x, t_x)?;
                outs.push(randomize(pp, server.ek(), j, bundle.as_ref().expect("set above"), &input)?);
            }
            Ok(outs)
        })
        .collect::<Result<_, _>>()?;

    let shuffler = Shuffler::new();
    let mut verdicts = Vec::with_capacity(t as usize);
    for j in 1..=t {
        let payloads: Vec<Vec<u8>> = outputs.iter().map(|o| o[j as usize - 1].encode()).collect();
        let batch = if pp.scheme == Scheme::Shuffle {
            payloads.into_par_iter().for_each(|p| shuffler.submit(j, p));
            shuffler.close(j, &mut sub_rng(seed, SHUFFLE_STREAM + ((j as u64) << 8))).payloads
        } else {
            payloads
        };
        verdicts.push(batch.par_iter().map(|p| server.verify_bytes(j, p)).collect());
    }
    Ok(verdicts)
}

/// Completeness with inputs drawn uniformly from the input domain and
/// timestamps uniformly from each window.
pub fn exp_completeness(scheme: Scheme, n: usize, t: u32, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let cfg = default_randomizer();
    let domain = cfg.input_domain();
    exp_completeness_with(scheme, n, t, cfg, seed, move |_, _, (lo, hi), rng| {
        (rng.gen_range(domain.clone()), rng.gen_range(lo + 1..=hi))
    })
}

/// Completeness with adversarially chosen `(x, t_x)`. If any choice lies
/// outside its window the experiment is a trivial pass and nothing runs.
pub fn exp_completeness_with<F>(
    scheme: Scheme,
    n: usize,
    t: u32,
    randomizer: RandomizerConfig,
    seed: u64,
    mut choose: F,
) -> Result<ExperimentReport, HarnessError>
where
    F: FnMut(usize, u32, (Timestamp, Timestamp), &mut ChaCha20Rng) -> (u64, Timestamp),
{
    let mut fx = Fixture::new(scheme, n, t, randomizer, seed)?;
    let mut report = ExperimentReport::new("completeness", Some(scheme), seed);
    report.stat("clients", n);
    report.stat("intervals", t);
    let mut rng = sub_rng(seed, CHOICE_STREAM);
    let mut inputs = vec![Vec::with_capacity(t as usize); n];
    for j in 1..=t {
        let window = fx.pp.grid.window(j)?;
        for (i, row) in inputs.iter_mut().enumerate() {
            let (x, t_x) = choose(i, j, window, &mut rng);
            if !(window.0 < t_x && t_x <= window.1) {
                report.status = Status::TrivialPass;
                report.record_trivial();
                report.stat("trivial_at", format!("client {i} interval {j} t_x {t_x}"));
                return Ok(report);
            }
            row.push((x, t_x));
        }
    }
    for verdict in run_honest(&mut fx, &inputs, seed)?.into_iter().flatten() {
        match verdict {
            Ok(_) => report.record_accept(),
            Err(r) => {
                report.record_reject();
                report.stat(&format!("reject.{}", r.code()), "seen");
            }
        }
    }
    report.pass = report.rejected == 0;
    Ok(report)
}

/// Accepted outputs of honest clients holding a fixed input, compared with
/// the closed-form output masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionCheck {
    pub counts: Vec<u64>,
    pub masses: Vec<f64>,
    pub accepted: u64,
    pub rejected: u64,
    pub chi: ChiSquare,
}

impl DistributionCheck {
    pub fn pass(&self) -> bool {
        self.rejected == 0 && self.chi.pass()
    }
}

pub fn honest_distribution(
    scheme: Scheme,
    randomizer: RandomizerConfig,
    x: u64,
    clients: usize,
    intervals: u32,
    alpha: f64,
    seed: u64,
) -> Result<DistributionCheck, HarnessError> {
    let mut fx = Fixture::new(scheme, clients, intervals, randomizer, seed)?;
    let ticks = (1..=intervals)
        .map(|j| fx.pp.grid.window(j).map(|(lo, _)| (x, lo + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let inputs = vec![ticks; clients];
    let lo = *randomizer.output_domain().start();
    let masses = masses::to_f64(&masses::output(&randomizer, x)?);
    let mut counts = vec![0u64; masses.len()];
    let (mut accepted, mut rejected) = (0, 0);
    for verdict in run_honest(&mut fx, &inputs, seed)?.into_iter().flatten() {
        match verdict {
            Ok(v) => {
                accepted += 1;
                counts[(v.0 - lo) as usize] += 1;
            }
            Err(_) => rejected += 1,
        }
    }
    let chi = chi_square(&counts, &masses, alpha)?;
    Ok(DistributionCheck {
        counts,
        masses,
        accepted,
        rejected,
        chi,
    })
}

/// Abort branches not reached by any passing outcome in `reports`.
pub fn uncovered_branches(reports: &[ExperimentReport]) -> Vec<(Scheme, Phase, Rejection)> {
    ABORT_BRANCHES
        .iter()
        .copied()
        .filter(|(s, p, r)| {
            !reports
                .iter()
                .flat_map(|rep| &rep.attacks)
                .any(|a| a.passed() && a.scheme == *s && a.phase == *p && a.expected == *r)
        })
        .collect()
}

/// Honest submissions in the soundness experiment: 40 clients over 50 intervals.
const SOUNDNESS_CLIENTS: usize = 40;
const SOUNDNESS_INTERVALS: u32 = 50;
const SOUNDNESS_ALPHA: f64 = 0.01;

/// Runs every attack in `attacks` that targets `scheme`, then checks that
/// honest outputs follow the closed-form distribution.
pub fn exp_soundness(scheme: Scheme, attacks: &[AttackSpec], seed: u64) -> Result<ExperimentReport, HarnessError> {
    if attacks.is_empty() {
        return Err(HarnessError::EmptyCatalog);
    }
    let mut report = ExperimentReport::new("soundness", Some(scheme), seed);
    let outcomes = attacks
        .par_iter()
        .enumerate()
        .filter(|(_, a)| a.targets(scheme))
        .map(|(i, a)| run_attack(a, scheme, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    for o in outcomes {
        match o.observed {
            Some(_) => report.record_reject(),
            None => report.record_accept(),
        }
        report.pass &= o.passed();
        report.attacks.push(o);
    }

    let cfg = default_randomizer();
    let x = *cfg.input_domain().start() + 1;
    let dist = honest_distribution(
        scheme,
        cfg,
        x,
        SOUNDNESS_CLIENTS,
        SOUNDNESS_INTERVALS,
        SOUNDNESS_ALPHA,
        seed ^ 0x5eed,
    )?;
    for _ in 0..dist.accepted {
        report.record_accept();
    }
    for _ in 0..dist.rejected {
        report.record_reject();
    }
    report.stat("honest.x", x);
    report.stat("honest.counts", join(&dist.counts));
    report.stat("honest.chi2", dist.chi.statistic);
    report.stat("honest.dof", dist.chi.dof);
    report.stat("honest.critical", dist.chi.critical);
    report.stat("honest.alpha", SOUNDNESS_ALPHA);
    report.stat("honest.pass", dist.pass());
    report.pass &= dist.pass();
    Ok(report)
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

/// Pairs compared by the structural subset.
const IND_INTERVALS: u32 = 32;

/// Shuffle indistinguishability. The structural subset checks that two
/// clients with equal `(x, t_x)` and equal sampled output produce
/// submissions that differ only in proof bytes. The full distinguisher game
/// needs a zero-knowledge backend.
pub fn exp_shuffle_ind(seed: u64, backend: BackendId, full: bool) -> Result<ExperimentReport, HarnessError> {
    if full && !backend.is_zero_knowledge() {
        return Err(HarnessError::BackendCannotSatisfyZk(backend));
    }
    let options = SetupOptions {
        backend,
        ..SetupOptions::default()
    };
    let mut fx = Fixture::with_options(Scheme::Shuffle, 2, IND_INTERVALS, default_randomizer(), options, seed)?;
    let mut report = ExperimentReport::new("shuffle-ind", Some(Scheme::Shuffle), seed);
    let bundles = [fx.genrand(0, 1)?, fx.genrand(1, 1)?];
    let x = 2;
    let (mut tau_len, mut payload_len) = (0, 0);
    for j in 1..=IND_INTERVALS {
        let inputs = [fx.sign_in_window(0, j, x)?, fx.sign_in_window(1, j, x)?];
        let outs = [
            randomize(&fx.pp, fx.server.ek(), j, &bundles[0], &inputs[0])?,
            randomize(&fx.pp, fx.server.ek(), j, &bundles[1], &inputs[1])?,
        ];
        if outs[0].x_tilde != outs[1].x_tilde {
            continue;
        }
        let phis = [
            instance(&fx.pp, j, &bundles[0], &inputs[0], outs[0].x_tilde)?.0.to_bytes(),
            instance(&fx.pp, j, &bundles[1], &inputs[1], outs[1].x_tilde)?.0.to_bytes(),
        ];
        let blanked = outs.clone().map(|mut o| {
            o.proof = Proof(vec![0; o.proof.len()]);
            o.encode()
        });
        let taus = outs.clone().map(|o| o.tau.to_raw());
        let sizes = outs.clone().map(|o| o.encode().len());
        let verified = outs.iter().all(|o| fx.server.verify(j, o).is_ok());
        tau_len = taus[0].len().max(taus[1].len());
        payload_len = sizes[0];
        let same = taus[0].is_empty() && taus[1].is_empty() && phis[0] == phis[1] && blanked[0] == blanked[1];
        if same && verified {
            report.record_accept();
        } else {
            report.record_reject();
        }
    }
    report.stat("pairs", report.trials);
    report.stat("tau_bytes", tau_len);
    report.stat("payload_bytes", payload_len);
    report.stat("mode", if full { "full" } else { "structural" });
    report.pass = report.trials > 0 && report.rejected == 0;
    Ok(report)
}

/// Zero knowledge against the simulator. Reported as not applicable for a
/// backend that reveals the witness.
pub fn exp_zero_knowledge(seed: u64, backend: BackendId) -> Result<ExperimentReport, HarnessError> {
    let mut report = ExperimentReport::new("zero-knowledge", None, seed);
    if !backend.is_zero_knowledge() {
        report.status = Status::NotApplicable;
        report.pass = false;
        report.stat("backend", backend.name());
        report.stat("reason", "backend reveals the witness");
        return Ok(report);
    }
    let options = SetupOptions {
        backend,
        ..SetupOptions::default()
    };
    // A zero-knowledge backend would run the simulator game here; the only
    // one available errors out during setup.
    Fixture::with_options(Scheme::Shuffle, 1, 1, default_randomizer(), options, seed)?;
    Err(HarnessError::BackendCannotSatisfyZk(backend))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completeness_trivial_pass_on_stale_tick() {
        let r = exp_completeness_with(Scheme::Base, 2, 2, default_randomizer(), 5, |i, j, (lo, hi), _| {
            if i == 1 && j == 2 {
                (1, lo)
            } else {
                (1, hi)
            }
        })
        .unwrap();
        assert_eq!(r.status, Status::TrivialPass);
        assert!(r.tallies_consistent());
    }

    #[test]
    fn zero_knowledge_not_applicable_under_direct_check() {
        let r = exp_zero_knowledge(1, BackendId::DirectCheck).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn full_indistinguishability_refused_under_direct_check() {
        assert!(matches!(
            exp_shuffle_ind(1, BackendId::DirectCheck, true),
            Err(HarnessError::BackendCannotSatisfyZk(BackendId::DirectCheck))
        ));
    }
}
