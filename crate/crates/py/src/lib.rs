//! Python bindings: randomizers, an in-memory deployment, attacks and the
//! pipeline simulator.

use std::collections::HashMap;

use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use vldp::harness::{attack_catalog, exp_completeness, run_attack, Fixture};
use vldp::ldp::{Probability, RandomTape, Randomizer as _, RandomizerConfig, SampleWidth};
use vldp::protocol::{randomize, RandomnessBundle, Scheme};
use vldp_cli::config::RunConfig;
use vldp_cli::pipeline::{load_inputs, run_pipeline, Estimate};

pyo3::create_exception!(vldp_py, Rejected, PyException);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(value_err)
}

/// Fixed-tape LDP randomizer.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
pub struct Randomizer {
    cfg: RandomizerConfig,
}

#[pymethods]
impl Randomizer {
    /// `kind` is "histogram" or "reals"; `gamma` is a fraction such as "1/2".
    #[new]
    #[pyo3(signature = (kind, k, gamma, width = 64))]
    fn new(kind: &str, k: u64, gamma: &str, width: u32) -> PyResult<Self> {
        let gamma: Probability = gamma.parse().map_err(value_err)?;
        let width = SampleWidth::from_bits(width).map_err(value_err)?;
        let cfg = RandomizerConfig::new(kind.parse().map_err(value_err)?, k, gamma, width).map_err(value_err)?;
        Ok(Self { cfg })
    }

    #[getter]
    fn tape_bytes(&self) -> usize {
        self.cfg.required_tape_bytes()
    }

    fn input_domain(&self) -> (u64, u64) {
        let d = self.cfg.input_domain();
        (*d.start(), *d.end())
    }

    fn output_domain(&self) -> (u64, u64) {
        let d = self.cfg.output_domain();
        (*d.start(), *d.end())
    }

    /// Deterministic output for input `x` (encoded) under `tape`.
    fn apply(&self, x: u64, tape: &[u8]) -> PyResult<u64> {
        self.cfg
            .apply(x, &mut RandomTape::new(tape.to_vec()))
            .map(|v| v.0)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Randomizer({}, k={}, gamma={}, width={})",
            self.cfg.kind,
            self.cfg.k,
            self.cfg.gamma,
            self.cfg.width.bits()
        )
    }
}

/// Server, registered clients and public parameters in one process.
#[pyclass(unsendable)]
pub struct Deployment {
    fx: Fixture,
    bundles: HashMap<(usize, u32), RandomnessBundle>,
}

#[pymethods]
impl Deployment {
    #[new]
    #[pyo3(signature = (scheme_name, clients, intervals, randomizer, seed = 0))]
    fn new(scheme_name: &str, clients: usize, intervals: u32, randomizer: Randomizer, seed: u64) -> PyResult<Self> {
        let fx = Fixture::new(scheme(scheme_name)?, clients, intervals, randomizer.cfg, seed).map_err(value_err)?;
        Ok(Self {
            fx,
            bundles: HashMap::new(),
        })
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.fx.pp.scheme.name()
    }

    #[getter]
    fn server_key<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.fx.server.pk_s().0)
    }

    /// Runs GenRand for client `i`; `j` only matters for the base scheme.
    #[pyo3(signature = (i, j = 1))]
    fn genrand(&mut self, i: usize, j: u32) -> PyResult<()> {
        self.check_client(i)?;
        let b = self.fx.genrand(i, j).map_err(|e| Rejected::new_err(e.to_string()))?;
        let key = if self.fx.pp.scheme == Scheme::Base { j } else { 0 };
        self.bundles.insert((i, key), b);
        Ok(())
    }

    /// Signs `x` for client `i` in interval `j`, randomizes it and returns
    /// the framed submission.
    fn submit<'py>(&mut self, py: Python<'py>, i: usize, j: u32, x: u64) -> PyResult<Bound<'py, PyBytes>> {
        self.check_client(i)?;
        let key = if self.fx.pp.scheme == Scheme::Base { j } else { 0 };
        let bundle = self
            .bundles
            .get(&(i, key))
            .ok_or_else(|| PyValueError::new_err("run genrand first"))?;
        let input = self.fx.sign_in_window(i, j, x).map_err(value_err)?;
        let out = randomize(&self.fx.pp, self.fx.server.ek(), j, bundle, &input).map_err(value_err)?;
        Ok(PyBytes::new(py, &out.encode()))
    }

    /// Returns the randomized value, or raises `Rejected` with a reason code.
    fn verify(&self, j: u32, submission: &[u8]) -> PyResult<u64> {
        self.fx
            .server
            .verify_bytes(j, submission)
            .map(|v| v.0)
            .map_err(|r| Rejected::new_err(r.code()))
    }
}

impl Deployment {
    fn check_client(&self, i: usize) -> PyResult<()> {
        if i < self.fx.clients.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("no client {i}")))
        }
    }
}

/// Runs every attack that targets `scheme_name`; returns one dict per attack.
#[pyfunction]
#[pyo3(signature = (scheme_name, seed = 0))]
fn run_attacks<'py>(py: Python<'py>, scheme_name: &str, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = scheme(scheme_name)?;
    let mut out = Vec::new();
    for (i, a) in attack_catalog().iter().enumerate().filter(|(_, a)| a.targets(s)) {
        let o = run_attack(a, s, seed.wrapping_add(i as u64)).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("attack", a.name)?;
        d.set_item("expected", a.expected.code())?;
        d.set_item("observed", o.observed.map(|r| r.code()))?;
        d.set_item("passed", o.passed())?;
        out.push(d);
    }
    Ok(out)
}

/// Completeness experiment; returns the report as `key=value` text.
#[pyfunction]
fn completeness(scheme_name: &str, clients: usize, intervals: u32, seed: u64) -> PyResult<String> {
    exp_completeness(scheme(scheme_name)?, clients, intervals, seed)
        .map(|r| r.to_kv())
        .map_err(value_err)
}

/// Runs the pipeline for a `key = value` config and returns per-interval
/// estimates.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = RunConfig::parse(config).map_err(value_err)?;
    let inputs = load_inputs(&cfg, &cfg.randomizer().map_err(value_err)?).map_err(value_err)?;
    let run = run_pipeline(&cfg, &inputs).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("accepted", run.accepted())?;
    d.set_item("rejected", run.rejected())?;
    let mut estimates = Vec::new();
    for r in &run.intervals {
        let e = PyDict::new(py);
        match &r.estimate {
            Estimate::Histogram { raw, debiased, truth } => {
                e.set_item("raw", raw.clone())?;
                e.set_item("estimate", debiased.clone())?;
                e.set_item("truth", truth.clone())?;
            }
            Estimate::Mean { estimate, truth } => {
                e.set_item("estimate", *estimate)?;
                e.set_item("truth", *truth)?;
            }
        }
        estimates.push(e);
    }
    d.set_item("intervals", estimates)?;
    d.set_item("traffic_fixed", run.traffic.fixed)?;
    d.set_item("traffic_per_interval", run.traffic.per_interval)?;
    Ok(d)
}

#[pymodule]
mod vldp_py {
    #[pymodule_export]
    use super::{completeness, run_attacks, simulate, Deployment, Randomizer, Rejected};
}
