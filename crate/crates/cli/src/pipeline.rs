//! End-to-end simulation: setup, key generation, GenRand, per-interval
//! randomization, shuffling, verification and aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use vldp::harness::{sub_rng, GRID_STEP};
use vldp::ldp::{aggregate_hist, aggregate_real_debias, LdpValue, RandomizerConfig, RandomizerKind, REAL_SCALE};
use vldp::primitives::Wire;
use vldp::protocol::{
    genrand_request, randomize, setup_with, ProtocolError, PublicParams, Scheme, ServerState, SetupOptions, TimeGrid,
};
use vldp::shuffler::Shuffler;

use crate::bench::{median, BenchRecord};
use crate::config::{DatasetSource, RunConfig};
use crate::dataset::{ingest_csv, synth_dataset, Inputs};
use crate::error::CliError;
use crate::store::{keygen_all, ClientRecord};

pub const GENRAND_1: &str = "genrand-1";
pub const GENRAND_2: &str = "genrand-2";
pub const RANDOMIZE: &str = "randomize";
pub const VERIFY: &str = "verify";
pub const PHASES: [&str; 4] = [GENRAND_1, GENRAND_2, RANDOMIZE, VERIFY];

const SHUFFLE_STREAM: u64 = 2;
const CLIENT_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    /// Debiased count per bin, next to the raw and true counts.
    Histogram {
        raw: Vec<u64>,
        debiased: Vec<f64>,
        truth: Vec<u64>,
    },
    Mean { estimate: f64, truth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalResult {
    pub j: u32,
    pub accepted: usize,
    pub rejected: usize,
    /// Verified outputs in the order the server saw them.
    pub outputs: Vec<LdpValue>,
    pub estimate: Estimate,
}

/// Bytes sent by each client, split into the one-off GenRand cost and the
/// per-interval cost. Base runs GenRand every interval, so its GenRand
/// bytes count as per-interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Traffic {
    pub fixed: usize,
    pub per_interval: usize,
    /// Smallest and largest framed submission.
    pub submit_min: usize,
    pub submit_max: usize,
    pub per_client: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub scheme: Scheme,
    pub backend: String,
    pub intervals: Vec<IntervalResult>,
    pub traffic: Traffic,
    pub timings: BTreeMap<&'static str, Vec<Duration>>,
    pub bytes: BTreeMap<&'static str, Vec<usize>>,
}

impl PipelineRun {
    pub fn accepted(&self) -> usize {
        self.intervals.iter().map(|r| r.accepted).sum()
    }

    pub fn rejected(&self) -> usize {
        self.intervals.iter().map(|r| r.rejected).sum()
    }

    pub fn bench_records(&self) -> Vec<BenchRecord> {
        PHASES
            .iter()
            .filter_map(|&phase| {
                let times = self.timings.get(phase)?;
                let bytes = self.bytes.get(phase).map_or(0, |b| {
                    let mut b = b.clone();
                    b.sort_unstable();
                    b[b.len() / 2]
                });
                Some(BenchRecord {
                    phase: phase.to_string(),
                    median: median(times),
                    runs: times.len(),
                    bytes,
                    backend: self.backend.clone(),
                })
            })
            .collect()
    }
}

pub fn load_inputs(cfg: &RunConfig, randomizer: &RandomizerConfig) -> Result<Inputs, CliError> {
    let inputs = match &cfg.dataset {
        DatasetSource::Synthetic(spec) => synth_dataset(randomizer, cfg.clients, cfg.intervals, spec, cfg.seed)?,
        DatasetSource::Csv(path) => ingest_csv(path, randomizer, Some(cfg.intervals), cfg.missing)?,
    };
    inputs.check_shape(cfg.clients, cfg.intervals)?;
    Ok(inputs)
}

pub fn build(cfg: &RunConfig) -> Result<(PublicParams, ServerState, Vec<ClientRecord>), CliError> {
    let mut rng = sub_rng(cfg.seed, 0);
    let grid = TimeGrid::uniform(cfg.intervals, GRID_STEP)?;
    let options = SetupOptions {
        backend: cfg.backend,
        merkle_depth: cfg.merkle_depth,
        ..SetupOptions::default()
    };
    let pp = setup_with(cfg.scheme, grid, cfg.randomizer()?, options, &mut rng)?;
    let (server, clients) = keygen_all(&pp, cfg.clients, &mut rng)?;
    Ok((pp, server, clients))
}

struct ClientRun {
    submissions: Vec<Vec<u8>>,
    genrand_bytes: Vec<(usize, usize)>,
    timings: Vec<(&'static str, Duration)>,
}

fn timed<T>(log: &mut Vec<(&'static str, Duration)>, phase: &'static str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    log.push((phase, start.elapsed()));
    out
}

fn run_client(
    pp: &PublicParams,
    server: &ServerState,
    record: &ClientRecord,
    row: &[u64],
    rng_seed: (u64, u64),
) -> Result<ClientRun, CliError> {
    let mut rng = sub_rng(rng_seed.0, rng_seed.1);
    let mut te = record.environment(pp);
    let mut run = ClientRun {
        submissions: Vec::with_capacity(row.len()),
        genrand_bytes: Vec::new(),
        timings: Vec::new(),
    };
    let mut bundle = None;
    for j in 1..=pp.intervals() {
        if bundle.is_none() || pp.scheme == Scheme::Base {
            let jj = (pp.scheme == Scheme::Base).then_some(j);
            let (pending, req) = timed(&mut run.timings, GENRAND_1, || {
                genrand_request(pp, te.public(), jj, &mut rng)
            })?;
            let req_bytes = req.encode(pp);
            let resp = timed(&mut run.timings, GENRAND_2, || {
                server.handle_genrand_bytes(&req_bytes, &mut rng)
            })
            .map_err(CliError::Rejected)?;
            let resp_len = resp.to_bytes().len();
            let start = Instant::now();
            bundle = Some(pending.finish(&server.pk_s(), &resp)?);
            if let Some(last) = run.timings.iter_mut().rev().find(|(p, _)| *p == GENRAND_1) {
                last.1 += start.elapsed();
            }
            run.genrand_bytes.push((req_bytes.len(), resp_len));
        }
        let (t_prev, _) = pp.grid.window(j)?;
        let input = te.sign(row[j as usize - 1], t_prev + 1)?;
        let b = bundle.as_ref().expect("set above");
        let out = timed(&mut run.timings, RANDOMIZE, || randomize(pp, server.ek(), j, b, &input))?;
        run.submissions.push(out.encode());
    }
    Ok(run)
}

fn estimate(cfg: &RandomizerConfig, outputs: &[LdpValue], truth: &[u64]) -> Result<Estimate, CliError> {
    let n = outputs.len();
    let ldp = |e| CliError::Protocol(ProtocolError::Ldp(e));
    Ok(match cfg.kind {
        RandomizerKind::Histogram => {
            let raw = aggregate_hist(outputs, cfg.k).map_err(ldp)?;
            let g = cfg.gamma.to_f64();
            let debiased = raw
                .iter()
                .map(|&c| (c as f64 - n as f64 * g / cfg.k as f64) / (1.0 - g))
                .collect();
            let mut counts = vec![0u64; cfg.k as usize];
            for &x in truth {
                counts[x as usize - 1] += 1;
            }
            Estimate::Histogram {
                raw,
                debiased,
                truth: counts,
            }
        }
        RandomizerKind::Reals => {
            let sum = if n == 0 {
                0.0
            } else {
                aggregate_real_debias(outputs, cfg.k, cfg.gamma, n).map_err(ldp)?
            };
            Estimate::Mean {
                estimate: sum / n.max(1) as f64,
                truth: truth.iter().map(|&v| v as f64 / REAL_SCALE as f64).sum::<f64>() / truth.len().max(1) as f64,
            }
        }
    })
}

pub fn run_pipeline(cfg: &RunConfig, inputs: &Inputs) -> Result<PipelineRun, CliError> {
    inputs.check_shape(cfg.clients, cfg.intervals)?;
    let (pp, server, clients) = build(cfg)?;
    let randomizer = *pp.randomizer();
    let runs: Vec<ClientRun> = clients
        .par_iter()
        .zip(&inputs.values)
        .enumerate()
        .map(|(i, (rec, row))| run_client(&pp, &server, rec, row, (cfg.seed, CLIENT_STREAM + i as u64)))
        .collect::<Result<_, _>>()?;

    let mut timings: BTreeMap<&'static str, Vec<Duration>> = BTreeMap::new();
    let mut bytes: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for r in &runs {
        for (phase, d) in &r.timings {
            timings.entry(phase).or_default().push(*d);
        }
        for (req, resp) in &r.genrand_bytes {
            bytes.entry(GENRAND_1).or_default().push(*req);
            bytes.entry(GENRAND_2).or_default().push(*resp);
        }
        for s in &r.submissions {
            bytes.entry(RANDOMIZE).or_default().push(s.len());
            bytes.entry(VERIFY).or_default().push(s.len());
        }
    }

    let shuffler = Shuffler::new();
    let mut intervals = Vec::with_capacity(cfg.intervals as usize);
    for j in 1..=cfg.intervals {
        let payloads: Vec<Vec<u8>> = runs.iter().map(|r| r.submissions[j as usize - 1].clone()).collect();
        let batch = if cfg.scheme == Scheme::Shuffle {
            for p in payloads {
                shuffler.submit(j, p);
            }
            shuffler
                .close(j, &mut sub_rng(cfg.seed, SHUFFLE_STREAM + ((j as u64) << 8)))
                .payloads
        } else {
            payloads
        };
        let verdicts: Vec<_> = batch
            .par_iter()
            .map(|p| {
                let start = Instant::now();
                let v = server.verify_bytes(j, p);
                (v, start.elapsed())
            })
            .collect();
        let mut outputs = Vec::with_capacity(verdicts.len());
        let mut rejected = 0;
        for (v, d) in verdicts {
            timings.entry(VERIFY).or_default().push(d);
            match v {
                Ok(x) => outputs.push(x),
                Err(_) => rejected += 1,
            }
        }
        let truth: Vec<u64> = inputs.values.iter().map(|row| row[j as usize - 1]).collect();
        intervals.push(IntervalResult {
            j,
            accepted: outputs.len(),
            rejected,
            estimate: estimate(&randomizer, &outputs, &truth)?,
            outputs,
        });
    }

    let genrand_per_run = |r: &ClientRun| r.genrand_bytes.iter().map(|(a, b)| a + b).sum::<usize>();
    let per_client: Vec<usize> = runs
        .iter()
        .map(|r| genrand_per_run(r) + r.submissions.iter().map(Vec::len).sum::<usize>())
        .collect();
    let submit = bytes.get(RANDOMIZE).cloned().unwrap_or_default();
    let submit_min = submit.iter().copied().min().unwrap_or(0);
    let submit_max = submit.iter().copied().max().unwrap_or(0);
    let genrand_once = runs.first().and_then(|r| r.genrand_bytes.first()).map_or(0, |(a, b)| a + b);
    let (fixed, per_interval) = match cfg.scheme {
        Scheme::Base => (0, genrand_once + submit_max),
        _ => (genrand_once, submit_max),
    };
    Ok(PipelineRun {
        scheme: cfg.scheme,
        backend: cfg.backend.name().to_string(),
        intervals,
        traffic: Traffic {
            fixed,
            per_interval,
            submit_min,
            submit_max,
            per_client,
        },
        timings,
        bytes,
    })
}

pub fn results_csv(run: &PipelineRun) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["interval", "accepted", "rejected", "bin", "raw", "estimate", "truth"])?;
    for r in &run.intervals {
        let head = [r.j.to_string(), r.accepted.to_string(), r.rejected.to_string()];
        match &r.estimate {
            Estimate::Histogram { raw, debiased, truth } => {
                for (b, ((c, e), t)) in raw.iter().zip(debiased).zip(truth).enumerate() {
                    let row = [(b + 1).to_string(), c.to_string(), format!("{e:.4}"), t.to_string()];
                    w.write_record(head.iter().chain(&row))?;
                }
            }
            Estimate::Mean { estimate, truth } => {
                let raw: u64 = r.outputs.iter().map(|v| v.0).sum();
                let row = ["mean".to_string(), raw.to_string(), format!("{estimate:.6}"), format!("{truth:.6}")];
                w.write_record(head.iter().chain(&row))?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

pub fn report_text(cfg: &RunConfig, run: &PipelineRun) -> String {
    let mut s = String::new();
    let t = &run.traffic;
    let mean_client = t.per_client.iter().sum::<usize>() as f64 / t.per_client.len().max(1) as f64;
    let _ = writeln!(s, "scheme={}", run.scheme);
    let _ = writeln!(s, "backend={}", run.backend);
    let _ = writeln!(s, "clients={}", cfg.clients);
    let _ = writeln!(s, "intervals={}", cfg.intervals);
    let _ = writeln!(s, "seed={}", cfg.seed);
    let _ = writeln!(s, "accepted={}", run.accepted());
    let _ = writeln!(s, "rejected={}", run.rejected());
    let _ = writeln!(s, "traffic.fixed={}", t.fixed);
    let _ = writeln!(s, "traffic.per_interval={}", t.per_interval);
    let _ = writeln!(s, "traffic.submit_min={}", t.submit_min);
    let _ = writeln!(s, "traffic.submit_max={}", t.submit_max);
    let _ = writeln!(s, "traffic.mean_per_client={mean_client:.1}");
    s
}

/// Writes `results.csv`, `bench.csv` and `report.txt` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &RunConfig, run: &PipelineRun) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(run)?)?;
    fs::write(dir.join("bench.csv"), crate::bench::bench_csv(&run.bench_records())?)?;
    fs::write(dir.join("report.txt"), report_text(cfg, run))?;
    fs::write(dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}
