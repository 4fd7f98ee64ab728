//! Per-phase timing with warm-up runs discarded.

use std::time::{Duration, Instant};

use vldp::harness::sub_rng;
use vldp::primitives::Wire;
use vldp::protocol::{genrand_request, randomize, Scheme};

use crate::config::{ConfigError, RunConfig};
use crate::error::CliError;
use crate::pipeline::{build, GENRAND_1, GENRAND_2, RANDOMIZE, VERIFY};

pub const WARMUPS: usize = 3;
pub const MIN_REPEATS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub phase: String,
    pub median: Duration,
    pub runs: usize,
    /// Size of the message the phase produces.
    pub bytes: usize,
    pub backend: String,
}

/// Median of the samples; the mean of the two middle values for even counts.
pub fn median(samples: &[Duration]) -> Duration {
    if samples.is_empty() {
        return Duration::ZERO;
    }
    let mut v = samples.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2
    } else {
        v[m]
    }
}

/// Times one GenRand, one Randomize and one Verify per repeat, each with a
/// fresh client, on interval 1.
pub fn bench(cfg: &RunConfig, repeats: usize) -> Result<Vec<BenchRecord>, CliError> {
    if repeats < MIN_REPEATS {
        return Err(ConfigError::TooFewRepeats(repeats).into());
    }
    let total = WARMUPS + repeats;
    let mut cfg = cfg.clone();
    cfg.clients = total;
    let (pp, server, clients) = build(&cfg)?;
    let mut rng = sub_rng(cfg.seed, 3);
    let mut samples: [Vec<Duration>; 4] = Default::default();
    let mut sizes = [0usize; 4];
    let x = *vldp::ldp::Randomizer::input_domain(pp.randomizer()).start();
    for (r, rec) in clients.iter().enumerate() {
        let mut te = rec.environment(&pp);
        let j = (pp.scheme == Scheme::Base).then_some(1);

        let start = Instant::now();
        let (pending, req) = genrand_request(&pp, te.public(), j, &mut rng)?;
        let req_bytes = req.encode(&pp);
        let t_client = start.elapsed();

        let start = Instant::now();
        let resp = server.handle_genrand_bytes(&req_bytes, &mut rng).map_err(CliError::Rejected)?;
        let resp_bytes = resp.to_bytes();
        let t_server = start.elapsed();

        let start = Instant::now();
        let bundle = pending.finish(&server.pk_s(), &resp)?;
        let t_client = t_client + start.elapsed();

        let (t_prev, _) = pp.grid.window(1)?;
        let input = te.sign(x, t_prev + 1)?;
        let start = Instant::now();
        let out = randomize(&pp, server.ek(), 1, &bundle, &input)?;
        let submit = out.encode();
        let t_rand = start.elapsed();

        let start = Instant::now();
        server.verify_bytes(1, &submit).map_err(CliError::Rejected)?;
        let t_verify = start.elapsed();

        if r >= WARMUPS {
            for (s, t) in samples.iter_mut().zip([t_client, t_server, t_rand, t_verify]) {
                s.push(t);
            }
        }
        sizes = [req_bytes.len(), resp_bytes.len(), submit.len(), submit.len()];
    }
    Ok([GENRAND_1, GENRAND_2, RANDOMIZE, VERIFY]
        .into_iter()
        .zip(samples)
        .zip(sizes)
        .map(|((phase, s), bytes)| BenchRecord {
            phase: phase.to_string(),
            median: median(&s),
            runs: s.len(),
            bytes,
            backend: cfg.backend.name().to_string(),
        })
        .collect())
}

pub fn bench_csv(records: &[BenchRecord]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["phase", "median_ns", "runs", "bytes", "backend"])?;
    for r in records {
        w.write_record([
            r.phase.clone(),
            r.median.as_nanos().to_string(),
            r.runs.to_string(),
            r.bytes.to_string(),
            r.backend.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        let d = Duration::from_nanos;
        assert_eq!(median(&[d(5), d(1), d(3)]), d(3));
        assert_eq!(median(&[d(4), d(1), d(3), d(2)]), Duration::from_nanos(2) + Duration::from_nanos(1) / 2);
        assert_eq!(median(&[]), Duration::ZERO);
    }
}
