//! Input matrices: CSV ingestion and synthetic generation.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;
use vldp::harness::sub_rng;
use vldp::ldp::{RandomizerConfig, RandomizerKind, RealInput, REAL_SCALE};

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("header must be `client_id,t_index,value`, found `{0}`")]
    Header(String),
    #[error("no value for client `{client}` in interval {t}")]
    Missing { client: String, t: u32 },
    #[error("categorical masses sum to {0}, not 1")]
    MassesNotNormalized(f64),
    #[error("bad dataset spec: {0}")]
    Spec(String),
    #[error("dataset has {got} {what}, config expects {expected}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// What to do with a `(client, interval)` cell absent from a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Insert 0.0; only valid for real inputs.
    Zero,
    Reject,
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::Zero => "zero",
            MissingPolicy::Reject => "reject",
        })
    }
}

impl FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "fill-zero" => Ok(MissingPolicy::Zero),
            "reject" => Ok(MissingPolicy::Reject),
            _ => Err(format!("unknown missing-value policy `{s}`")),
        }
    }
}

/// Dense `n x T` matrix of encoded inputs: fixed-point numerators for reals,
/// categories for histograms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inputs {
    pub kind: RandomizerKind,
    pub clients: Vec<String>,
    /// `values[i][j - 1]` is client `i`'s input in interval `j`.
    pub values: Vec<Vec<u64>>,
}

impl Inputs {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn intervals(&self) -> u32 {
        self.values.first().map_or(0, |r| r.len() as u32)
    }

    pub fn render(&self, v: u64) -> String {
        match self.kind {
            RandomizerKind::Reals => RealInput::from_scaled(v).map_or_else(|_| v.to_string(), |r| r.to_string()),
            RandomizerKind::Histogram => v.to_string(),
        }
    }

    pub fn check_shape(&self, clients: usize, intervals: u32) -> Result<(), DataError> {
        if self.n() != clients {
            return Err(DataError::Shape {
                what: "clients",
                expected: clients,
                got: self.n(),
            });
        }
        if self.intervals() != intervals {
            return Err(DataError::Shape {
                what: "intervals",
                expected: intervals as usize,
                got: self.intervals() as usize,
            });
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["client_id", "t_index", "value"])?;
        for (id, row) in self.clients.iter().zip(&self.values) {
            for (j, v) in row.iter().enumerate() {
                w.write_record([id.clone(), (j + 1).to_string(), self.render(*v)])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

pub fn parse_value(cfg: &RandomizerConfig, s: &str) -> Result<u64, String> {
    let v = match cfg.kind {
        RandomizerKind::Reals => s.parse::<RealInput>().map_err(|e| e.to_string())?.scaled(),
        RandomizerKind::Histogram => s.trim().parse::<u64>().map_err(|e| format!("`{s}`: {e}"))?,
    };
    vldp::ldp::Randomizer::check_input(cfg, v).map_err(|e| e.to_string())?;
    Ok(v)
}

/// Reads `client_id,t_index,value` rows; `t_index` runs from 1. Clients are
/// numbered in order of first appearance. `intervals` fixes `T`, otherwise
/// the largest `t_index` is used.
pub fn ingest_reader<R: Read>(
    reader: R,
    cfg: &RandomizerConfig,
    intervals: Option<u32>,
    policy: MissingPolicy,
) -> Result<Inputs, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| DataError::Header(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["client_id", "t_index", "value"] {
        return Err(DataError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(usize, u32), u64> = HashMap::new();
    let mut max_t = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Row {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row_err = |reason: String| DataError::Row { line, reason };
        if rec.len() != 3 {
            return Err(row_err(format!("expected 3 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        let t: u32 = rec[1].parse().map_err(|_| row_err(format!("bad t_index `{}`", &rec[1])))?;
        if t == 0 || intervals.is_some_and(|max| t > max) {
            return Err(row_err(format!("t_index {t} out of range")));
        }
        let v = parse_value(cfg, &rec[2]).map_err(row_err)?;
        let i = *index.entry(id.clone()).or_insert_with(|| {
            ids.push(id);
            ids.len() - 1
        });
        if cells.insert((i, t), v).is_some() {
            return Err(row_err(format!("duplicate cell for t_index {t}")));
        }
        max_t = max_t.max(t);
    }
    let t_count = intervals.unwrap_or(max_t);
    let mut values = Vec::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        let mut row = Vec::with_capacity(t_count as usize);
        for t in 1..=t_count {
            match (cells.get(&(i, t)), policy, cfg.kind) {
                (Some(v), _, _) => row.push(*v),
                (None, MissingPolicy::Zero, RandomizerKind::Reals) => row.push(0),
                _ => {
                    return Err(DataError::Missing {
                        client: id.clone(),
                        t,
                    })
                }
            }
        }
        values.push(row);
    }
    Ok(Inputs {
        kind: cfg.kind,
        clients: ids,
        values,
    })
}

pub fn ingest_csv(
    path: &Path,
    cfg: &RandomizerConfig,
    intervals: Option<u32>,
    policy: MissingPolicy,
) -> Result<Inputs, DataError> {
    ingest_reader(std::fs::File::open(path)?, cfg, intervals, policy)
}

/// Synthetic data distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSpec {
    /// Every cell holds this encoded value.
    Fixed(u64),
    /// Uniform over the input domain.
    Uniform,
    /// Histogram only: category `c` (from 1) has mass `masses[c - 1]`.
    Categorical(Vec<f64>),
}

impl SynthSpec {
    /// Parses `fixed:<v>`, `uniform` or `categorical:<m1>,<m2>,...`.
    pub fn parse(s: &str, kind: RandomizerKind) -> Result<Self, String> {
        let (head, arg) = s.split_once(':').unwrap_or((s, ""));
        match (head, kind) {
            ("uniform", _) => Ok(SynthSpec::Uniform),
            ("fixed", RandomizerKind::Reals) => Ok(SynthSpec::Fixed(
                arg.parse::<RealInput>().map_err(|e| e.to_string())?.scaled(),
            )),
            ("fixed", RandomizerKind::Histogram) => {
                Ok(SynthSpec::Fixed(arg.parse().map_err(|_| format!("bad category `{arg}`"))?))
            }
            ("categorical", RandomizerKind::Histogram) => arg
                .split(',')
                .map(|m| m.trim().parse::<f64>().map_err(|_| format!("bad mass `{m}`")))
                .collect::<Result<Vec<_>, _>>()
                .map(SynthSpec::Categorical),
            ("categorical", RandomizerKind::Reals) => Err("categorical data needs the histogram randomizer".into()),
            _ => Err(format!("unknown spec `{s}`")),
        }
    }

    pub fn render(&self, kind: RandomizerKind) -> String {
        match self {
            SynthSpec::Uniform => "uniform".into(),
            SynthSpec::Fixed(v) => match kind {
                RandomizerKind::Reals => format!("fixed:{}", RealInput::from_scaled(*v).map_err(|_| fmt::Error).map_or(v.to_string(), |r| r.to_string())),
                RandomizerKind::Histogram => format!("fixed:{v}"),
            },
            SynthSpec::Categorical(m) => {
                let parts: Vec<String> = m.iter().map(f64::to_string).collect();
                format!("categorical:{}", parts.join(","))
            }
        }
    }
}

const MASS_TOLERANCE: f64 = 1e-9;

/// Deterministic synthetic inputs for `n` clients over `t` intervals.
pub fn synth_dataset(
    cfg: &RandomizerConfig,
    n: usize,
    t: u32,
    spec: &SynthSpec,
    seed: u64,
) -> Result<Inputs, DataError> {
    let mut rng = sub_rng(seed, 7);
    let domain = vldp::ldp::Randomizer::input_domain(cfg);
    let mut draw: Box<dyn FnMut(&mut rand_chacha::ChaCha20Rng) -> u64> = match spec {
        SynthSpec::Fixed(v) => {
            vldp::ldp::Randomizer::check_input(cfg, *v).map_err(|e| DataError::Spec(e.to_string()))?;
            let v = *v;
            Box::new(move |_| v)
        }
        SynthSpec::Uniform => Box::new(move |rng| rng.gen_range(domain.clone())),
        SynthSpec::Categorical(masses) => {
            let sum: f64 = masses.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(DataError::MassesNotNormalized(sum));
            }
            if cfg.kind != RandomizerKind::Histogram || masses.len() as u64 > cfg.k {
                return Err(DataError::Spec(format!(
                    "{} masses do not fit the {} randomizer with k = {}",
                    masses.len(),
                    cfg.kind,
                    cfg.k
                )));
            }
            let w = WeightedIndex::new(masses).map_err(|e| DataError::Spec(e.to_string()))?;
            Box::new(move |rng| w.sample(rng) as u64 + 1)
        }
    };
    let values = (0..n).map(|_| (0..t).map(|_| draw(&mut rng)).collect()).collect();
    Ok(Inputs {
        kind: cfg.kind,
        clients: (0..n).map(|i| format!("c{i}")).collect(),
        values,
    })
}

/// Mean of a real-valued column, as a float.
pub fn real_mean(values: &[u64]) -> f64 {
    values.iter().map(|&v| v as f64 / REAL_SCALE as f64).sum::<f64>() / values.len().max(1) as f64
}
