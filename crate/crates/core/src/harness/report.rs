//! Experiment reports as `key=value` text and CSV tallies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{AttackOutcome, HarnessError};
use crate::protocol::{Phase, Rejection, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    /// A chosen timestamp fell outside its window, so the experiment
    /// returns success without running.
    TrivialPass,
    NotApplicable,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::TrivialPass => "trivial-pass",
            Status::NotApplicable => "not-applicable",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Status::Completed, Status::TrivialPass, Status::NotApplicable]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

fn phase_from_name(s: &str) -> Option<Phase> {
    [Phase::ServerGenRand, Phase::ClientGenRand, Phase::ServerVerify]
        .into_iter()
        .find(|p| p.name() == s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub scheme: Option<Scheme>,
    pub seed: u64,
    pub status: Status,
    pub trials: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub trivial: u64,
    pub pass: bool,
    pub attacks: Vec<AttackOutcome>,
    /// Free-form statistics, stored as text so they round-trip exactly.
    pub stats: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, scheme: Option<Scheme>, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            scheme,
            seed,
            status: Status::Completed,
            trials: 0,
            accepted: 0,
            rejected: 0,
            trivial: 0,
            pass: true,
            attacks: Vec::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn record_accept(&mut self) {
        self.trials += 1;
        self.accepted += 1;
    }

    pub fn record_reject(&mut self) {
        self.trials += 1;
        self.rejected += 1;
    }

    pub fn record_trivial(&mut self) {
        self.trials += 1;
        self.trivial += 1;
    }

    pub fn stat(&mut self, key: &str, value: impl ToString) {
        self.stats.insert(key.to_string(), value.to_string());
    }

    pub fn tallies_consistent(&self) -> bool {
        self.accepted + self.rejected + self.trivial == self.trials
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let scheme = self.scheme.map_or("-".to_string(), |s| s.to_string());
        let _ = writeln!(s, "experiment={}", self.experiment);
        let _ = writeln!(s, "scheme={scheme}");
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "status={}", self.status.name());
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "accepted={}", self.accepted);
        let _ = writeln!(s, "rejected={}", self.rejected);
        let _ = writeln!(s, "trivial={}", self.trivial);
        let _ = writeln!(s, "pass={}", self.pass);
        for (k, v) in &self.stats {
            let _ = writeln!(s, "stat.{k}={v}");
        }
        for a in &self.attacks {
            let _ = writeln!(
                s,
                "attack={},{},{},{},{},{}",
                a.attack,
                a.scheme,
                a.phase.name(),
                a.expected.code(),
                a.observed.map_or("accepted", |r| r.code()),
                a.honest_accepted
            );
        }
        s
    }

    pub fn from_kv(text: &str) -> Result<Self, HarnessError> {
        let mut r = Self::new("", None, 0);
        for (i, line) in text.lines().enumerate() {
            let err = |reason: &str| HarnessError::ReportParse {
                line: i + 1,
                reason: reason.to_string(),
            };
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("missing '='"))?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| err("not an integer"));
            match key {
                "experiment" => r.experiment = value.to_string(),
                "scheme" => r.scheme = parse_scheme(value).map_err(|e| err(&e))?,
                "seed" => r.seed = num(value)?,
                "status" => r.status = Status::from_name(value).ok_or_else(|| err("unknown status"))?,
                "trials" => r.trials = num(value)?,
                "accepted" => r.accepted = num(value)?,
                "rejected" => r.rejected = num(value)?,
                "trivial" => r.trivial = num(value)?,
                "pass" => r.pass = value.parse().map_err(|_| err("not a bool"))?,
                "attack" => {
                    let fields: Vec<&str> = value.split(',').collect();
                    r.attacks.push(parse_attack(&fields).map_err(|e| err(&e))?);
                }
                k => match k.strip_prefix("stat.") {
                    Some(name) => {
                        r.stats.insert(name.to_string(), value.to_string());
                    }
                    None => return Err(err("unknown key")),
                },
            }
        }
        Ok(r)
    }

    const TALLY_HEADER: [&'static str; 9] = [
        "experiment", "scheme", "seed", "status", "trials", "accepted", "rejected", "trivial", "pass",
    ];
    const ATTACK_HEADER: [&'static str; 6] = ["attack", "scheme", "phase", "expected", "observed", "honest_accepted"];

    /// One-row tally table.
    pub fn tally_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::TALLY_HEADER)?;
        w.write_record([
            self.experiment.clone(),
            self.scheme.map_or("-".to_string(), |s| s.to_string()),
            self.seed.to_string(),
            self.status.name().to_string(),
            self.trials.to_string(),
            self.accepted.to_string(),
            self.rejected.to_string(),
            self.trivial.to_string(),
            self.pass.to_string(),
        ])?;
        csv_string(w)
    }

    /// One row per attack outcome.
    pub fn attacks_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::ATTACK_HEADER)?;
        for a in &self.attacks {
            w.write_record([
                a.attack.as_str(),
                a.scheme.name(),
                a.phase.name(),
                a.expected.code(),
                a.observed.map_or("accepted", |r| r.code()),
                if a.honest_accepted { "true" } else { "false" },
            ])?;
        }
        csv_string(w)
    }

    /// Rebuilds tallies and attack outcomes; statistics are not part of the CSV form.
    pub fn from_csv(tally: &str, attacks: &str) -> Result<Self, HarnessError> {
        let mut r = Self::new("", None, 0);
        let mut rows = csv::Reader::from_reader(tally.as_bytes());
        let row = rows
            .records()
            .next()
            .ok_or_else(|| parse_err(2, "missing tally row"))??;
        let f = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| f(i).parse::<u64>().map_err(|_| parse_err(2, "not an integer"));
        r.experiment = f(0).to_string();
        r.scheme = parse_scheme(f(1)).map_err(|e| parse_err(2, &e))?;
        r.seed = num(2)?;
        r.status = Status::from_name(f(3)).ok_or_else(|| parse_err(2, "unknown status"))?;
        r.trials = num(4)?;
        r.accepted = num(5)?;
        r.rejected = num(6)?;
        r.trivial = num(7)?;
        r.pass = f(8).parse().map_err(|_| parse_err(2, "not a bool"))?;
        let mut rows = csv::Reader::from_reader(attacks.as_bytes());
        for (i, rec) in rows.records().enumerate() {
            let rec = rec?;
            let fields: Vec<&str> = rec.iter().collect();
            r.attacks.push(parse_attack(&fields).map_err(|e| parse_err(i + 2, &e))?);
        }
        Ok(r)
    }
}

fn parse_err(line: usize, reason: &str) -> HarnessError {
    HarnessError::ReportParse {
        line,
        reason: reason.to_string(),
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn parse_scheme(s: &str) -> Result<Option<Scheme>, String> {
    if s == "-" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn parse_attack(fields: &[&str]) -> Result<AttackOutcome, String> {
    let [attack, scheme, phase, expected, observed, honest] = fields else {
        return Err("attack needs six fields".into());
    };
    Ok(AttackOutcome {
        attack: attack.to_string(),
        scheme: scheme.parse()?,
        phase: phase_from_name(phase).ok_or("unknown phase")?,
        expected: Rejection::from_code(expected).ok_or("unknown reason code")?,
        observed: match *observed {
            "accepted" => None,
            code => Some(Rejection::from_code(code).ok_or("unknown reason code")?),
        },
        honest_accepted: honest.parse().map_err(|_| "not a bool")?,
    })
}
