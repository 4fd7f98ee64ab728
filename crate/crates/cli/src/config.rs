//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;
use vldp::ldp::{gamma_from_epsilon, Probability, RandomizerConfig, RandomizerKind, SampleWidth};
use vldp::protocol::Scheme;
use vldp::relations::BackendId;

use crate::dataset::{MissingPolicy, SynthSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("exactly one of `gamma` and `epsilon` must be set")]
    GammaXorEpsilon,
    #[error("`merkle_depth` only applies to the expand scheme")]
    DepthWithoutExpand,
    #[error("`{0}` must be at least 1")]
    Zero(&'static str),
    #[error("bench needs at least 4 repeats, got {0}")]
    TooFewRepeats(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Privacy {
    Gamma(Probability),
    Epsilon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(SynthSpec),
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub clients: usize,
    pub intervals: u32,
    pub kind: RandomizerKind,
    pub k: u64,
    pub privacy: Privacy,
    pub width: SampleWidth,
    pub merkle_depth: Option<u8>,
    pub backend: BackendId,
    pub seed: u64,
    pub dataset: DatasetSource,
    pub missing: MissingPolicy,
    pub output: PathBuf,
    pub repeats: usize,
}

pub const KEYS: &[&str] = &[
    "scheme",
    "clients",
    "intervals",
    "randomizer",
    "k",
    "gamma",
    "epsilon",
    "width",
    "merkle_depth",
    "backend",
    "seed",
    "dataset",
    "missing",
    "output",
    "repeats",
];

/// Splits config text into `(key, value)` pairs. `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn bad(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| bad(key, e))
}

impl RunConfig {
    /// Builds a config from entries; later entries override earlier ones.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut scheme = Scheme::Shuffle;
        let mut clients = 100usize;
        let mut intervals = 5u32;
        let mut kind = RandomizerKind::Histogram;
        let mut k = 8u64;
        let mut gamma: Option<Probability> = None;
        let mut epsilon: Option<f64> = None;
        let mut width = SampleWidth::W64;
        let mut merkle_depth = None;
        let mut backend = BackendId::DirectCheck;
        let mut seed = 0u64;
        let mut dataset_raw = "synthetic:uniform".to_string();
        let mut missing = MissingPolicy::Zero;
        let mut output = PathBuf::from("out");
        let mut repeats = 10usize;
        for (key, v) in entries {
            let key = key.as_str();
            match key {
                "scheme" => scheme = v.parse().map_err(|e| bad(key, e))?,
                "clients" => clients = num(key, v)?,
                "intervals" => intervals = num(key, v)?,
                "randomizer" => kind = v.parse().map_err(|e| bad(key, e))?,
                "k" => k = num(key, v)?,
                "gamma" => gamma = Some(v.parse().map_err(|e| bad(key, e))?),
                "epsilon" => epsilon = Some(num(key, v)?),
                "width" => {
                    let bits: u32 = num(key, v)?;
                    width = SampleWidth::from_bits(bits).map_err(|e| bad(key, e))?;
                }
                "merkle_depth" => merkle_depth = Some(num(key, v)?),
                "backend" => backend = v.parse().map_err(|e| bad(key, e))?,
                "seed" => seed = num(key, v)?,
                "dataset" => dataset_raw = v.clone(),
                "missing" => missing = v.parse().map_err(|e| bad(key, e))?,
                "output" => output = PathBuf::from(v),
                "repeats" => repeats = num(key, v)?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        let privacy = match (gamma, epsilon) {
            (Some(g), None) => Privacy::Gamma(g),
            (None, Some(e)) => Privacy::Epsilon(e),
            _ => return Err(ConfigError::GammaXorEpsilon),
        };
        if merkle_depth.is_some() && scheme != Scheme::Expand {
            return Err(ConfigError::DepthWithoutExpand);
        }
        if clients == 0 {
            return Err(ConfigError::Zero("clients"));
        }
        if intervals == 0 {
            return Err(ConfigError::Zero("intervals"));
        }
        if repeats == 0 {
            return Err(ConfigError::Zero("repeats"));
        }
        let dataset = match dataset_raw.split_once(':') {
            Some(("csv", path)) => DatasetSource::Csv(PathBuf::from(path)),
            Some(("synthetic", spec)) => {
                DatasetSource::Synthetic(SynthSpec::parse(spec, kind).map_err(|e| bad("dataset", e))?)
            }
            _ => return Err(bad("dataset", "expected `synthetic:<spec>` or `csv:<path>`")),
        };
        let cfg = Self {
            scheme,
            clients,
            intervals,
            kind,
            k,
            privacy,
            width,
            merkle_depth,
            backend,
            seed,
            dataset,
            missing,
            output,
            repeats,
        };
        cfg.randomizer()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&parse_entries(text)?)
    }

    pub fn randomizer(&self) -> Result<RandomizerConfig, ConfigError> {
        let gamma = match &self.privacy {
            Privacy::Gamma(g) => *g,
            Privacy::Epsilon(e) => gamma_from_epsilon(*e, self.k, self.kind).map_err(|err| bad("epsilon", err))?,
        };
        RandomizerConfig::new(self.kind, self.k, gamma, self.width).map_err(|e| bad("k", e))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "clients = {}", self.clients);
        let _ = writeln!(s, "intervals = {}", self.intervals);
        let _ = writeln!(s, "randomizer = {}", self.kind);
        let _ = writeln!(s, "k = {}", self.k);
        match &self.privacy {
            Privacy::Gamma(g) => writeln!(s, "gamma = {g}"),
            Privacy::Epsilon(e) => writeln!(s, "epsilon = {e}"),
        }
        .expect("write to string");
        let _ = writeln!(s, "width = {}", self.width.bits());
        if let Some(d) = self.merkle_depth {
            let _ = writeln!(s, "merkle_depth = {d}");
        }
        let _ = writeln!(s, "backend = {}", self.backend.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let dataset = match &self.dataset {
            DatasetSource::Synthetic(spec) => format!("synthetic:{}", spec.render(self.kind)),
            DatasetSource::Csv(p) => format!("csv:{}", p.display()),
        };
        let _ = writeln!(s, "dataset = {dataset}");
        let _ = writeln!(s, "missing = {}", self.missing);
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "repeats = {}", self.repeats);
        s
    }
}
