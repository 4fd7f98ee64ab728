//! Fixed-tape LDP randomizers for reals and histograms, and the aggregators.
//!
//! Every sampling step reads an `ℓ`-bit big-endian integer from a
//! [`RandomTape`] at a fixed offset, so the output is a pure function of
//! `(input, config, tape)` and can be recomputed by a relation checker.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::primitives::wire::{Reader, Tag, Wire, WireError, Writer};

/// Fixed-point denominator for real inputs in `[0, 1]`.
pub const REAL_SCALE: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdpError {
    #[error("epsilon must be a non-negative number, got {0}")]
    InvalidEpsilon(f64),
    #[error("probability {num}/{den} is not in [0, 1]")]
    InvalidProbability { num: u64, den: u64 },
    #[error("cannot parse `{0}`")]
    Parse(String),
    #[error("k = {k} is too small for {kind}")]
    InvalidK { kind: RandomizerKind, k: u64 },
    #[error("unsupported sample width of {0} bits")]
    InvalidWidth(u32),
    #[error("uniform range requires lb < ub, got [{lb}, {ub}]")]
    EmptyRange { lb: u64, ub: u64 },
    #[error("uniform range [{lb}, {ub}] is wider than 2^{bits}")]
    RangeTooWide { lb: u64, ub: u64, bits: u32 },
    #[error("random tape underflow: need {needed} bits, {available} left")]
    TapeUnderflow { needed: usize, available: usize },
    #[error("input {x} outside domain {lo}..={hi}")]
    InputOutOfDomain { x: u64, lo: u64, hi: u64 },
    #[error("value {value} outside output domain {lo}..={hi}")]
    ValueOutOfDomain { value: u64, lo: u64, hi: u64 },
    #[error("de-biasing needs gamma < 1")]
    NoSignal,
    #[error("expected {expected} values, got {got}")]
    CountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomizerKind {
    Reals,
    Histogram,
}

impl RandomizerKind {
    pub fn name(self) -> &'static str {
        match self {
            RandomizerKind::Reals => "reals",
            RandomizerKind::Histogram => "histogram",
        }
    }
}

impl fmt::Display for RandomizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RandomizerKind {
    type Err = LdpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "reals" | "real" => Ok(RandomizerKind::Reals),
            "histogram" | "hist" => Ok(RandomizerKind::Histogram),
            other => Err(LdpError::Parse(other.to_string())),
        }
    }
}

/// Bits per sample `ℓ`, between 1 and 64. Randomizer configs further
/// require a byte-aligned width from [`SampleWidth::STANDARD`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleWidth(u32);

impl SampleWidth {
    pub const W8: SampleWidth = SampleWidth(8);
    pub const W16: SampleWidth = SampleWidth(16);
    pub const W32: SampleWidth = SampleWidth(32);
    pub const W64: SampleWidth = SampleWidth(64);
    pub const STANDARD: [SampleWidth; 4] = [Self::W8, Self::W16, Self::W32, Self::W64];

    /// Any width in `1..=64`; used directly by the samplers.
    pub fn new(bits: u32) -> Result<Self, LdpError> {
        if (1..=64).contains(&bits) {
            Ok(SampleWidth(bits))
        } else {
            Err(LdpError::InvalidWidth(bits))
        }
    }

    /// One of the tape-compatible widths 8, 16, 32, 64.
    pub fn from_bits(bits: u32) -> Result<Self, LdpError> {
        Self::STANDARD
            .into_iter()
            .find(|w| w.0 == bits)
            .ok_or(LdpError::InvalidWidth(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn bytes(self) -> usize {
        self.0.div_ceil(8) as usize
    }

    pub fn is_standard(self) -> bool {
        Self::STANDARD.contains(&self)
    }

    /// `2^ℓ - 1`.
    pub fn max_value(self) -> u64 {
        u64::MAX >> (64 - self.0)
    }

    /// `2^ℓ`.
    pub fn modulus(self) -> u128 {
        1u128 << self.0
    }
}

/// Exact rational probability in `[0, 1]`, written `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probability(Ratio<u64>);

impl Probability {
    pub const ZERO: Probability = Probability(Ratio::new_raw(0, 1));
    pub const ONE: Probability = Probability(Ratio::new_raw(1, 1));

    pub fn new(num: u64, den: u64) -> Result<Self, LdpError> {
        if den == 0 || num > den {
            return Err(LdpError::InvalidProbability { num, den });
        }
        Ok(Probability(Ratio::new(num, den)))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn is_one(&self) -> bool {
        self.numer() == self.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(self.numer().into(), self.denom().into())
    }

    /// `floor(p · (2^ℓ - 1))`, computed exactly.
    pub fn threshold(&self, width: SampleWidth) -> u64 {
        let t = self.numer() as u128 * width.max_value() as u128 / self.denom() as u128;
        t as u64
    }

    /// Best rational approximation of `value` with a denominator below 2^53
    /// and relative error at most 1e-12.
    pub fn approximate(value: f64) -> Result<Self, LdpError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(LdpError::Parse(value.to_string()));
        }
        if value == 0.0 || value == 1.0 {
            return Ok(if value == 0.0 { Self::ZERO } else { Self::ONE });
        }
        const MAX_DEN: u64 = 1 << 53;
        let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
        let mut rem = value;
        loop {
            let a = rem.floor();
            let a_int = a as u64;
            let (p2, q2) = match (
                a_int.checked_mul(p1).and_then(|v| v.checked_add(p0)),
                a_int.checked_mul(q1).and_then(|v| v.checked_add(q0)),
            ) {
                (Some(p), Some(q)) if q <= MAX_DEN => (p, q),
                _ => break,
            };
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            let approx = p1 as f64 / q1 as f64;
            if (approx - value).abs() <= 1e-12 * value {
                break;
            }
            let frac = rem - a;
            if frac <= 0.0 {
                break;
            }
            rem = 1.0 / frac;
        }
        Probability::new(p1, q1.max(1))
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Probability {
    type Err = LdpError;

    /// Accepts `num/den` or a plain integer `0`/`1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|_| LdpError::Parse(s.to_string()));
        match s.split_once('/') {
            Some((n, d)) => Probability::new(parse(n)?, parse(d)?),
            None => Probability::new(parse(s)?, 1),
        }
    }
}

/// `γ` for the given privacy budget.
///
/// Reals: `γ = (k+1)/(e^ε + k)`. Histograms substitute `k-1` for `k`, giving
/// `γ = k/(e^ε + k - 1)`. `ε = 0` yields exactly 1 and `ε = ∞` exactly 0.
pub fn gamma_from_epsilon(epsilon: f64, k: u64, kind: RandomizerKind) -> Result<Probability, LdpError> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(LdpError::InvalidEpsilon(epsilon));
    }
    let kk = match kind {
        RandomizerKind::Reals if k >= 1 => k,
        RandomizerKind::Histogram if k >= 2 => k - 1,
        _ => return Err(LdpError::InvalidK { kind, k }),
    };
    if epsilon == 0.0 {
        return Ok(Probability::ONE);
    }
    if epsilon.is_infinite() {
        return Ok(Probability::ZERO);
    }
    let kk = kk as f64;
    Probability::approximate((kk + 1.0) / (epsilon.exp() + kk))
}

/// `Ber~(p; ρ)`: 1 iff `ρ <= floor(p · (2^ℓ - 1))`.
pub fn approx_bernoulli(p: Probability, rho: u64, width: SampleWidth) -> bool {
    debug_assert!(rho <= width.max_value());
    rho <= p.threshold(width)
}

/// `Unif~([lb, ub]; ρ)` with bucket width `Δ = floor(2^ℓ / (ub - lb + 1))`;
/// the last bucket absorbs the remainder.
pub fn approx_uniform(lb: u64, ub: u64, rho: u64, width: SampleWidth) -> Result<u64, LdpError> {
    let delta = uniform_delta(lb, ub, width)?;
    let j = rho as u128 / delta;
    Ok(if j < (ub - lb) as u128 { lb + j as u64 } else { ub })
}

fn uniform_delta(lb: u64, ub: u64, width: SampleWidth) -> Result<u128, LdpError> {
    if lb >= ub {
        return Err(LdpError::EmptyRange { lb, ub });
    }
    let delta = width.modulus() / ((ub - lb) as u128 + 1);
    if delta == 0 {
        return Err(LdpError::RangeTooWide {
            lb,
            ub,
            bits: width.bits(),
        });
    }
    Ok(delta)
}

/// Uniform bit string consumed front to back in `ℓ`-bit slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomTape {
    bytes: Vec<u8>,
    cursor: usize,
}

impl RandomTape {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self { bytes, cursor: 0 }
    }

    pub fn remaining_bits(&self) -> usize {
        (self.bytes.len() - self.cursor) * 8
    }

    pub fn ensure(&self, bits: usize) -> Result<(), LdpError> {
        if self.remaining_bits() < bits {
            return Err(LdpError::TapeUnderflow {
                needed: bits,
                available: self.remaining_bits(),
            });
        }
        Ok(())
    }

    /// Next `ℓ` bits as an unsigned big-endian integer. Reads whole bytes, so
    /// `ℓ` must be a multiple of 8.
    pub fn next_sample(&mut self, width: SampleWidth) -> Result<u64, LdpError> {
        if width.bits() % 8 != 0 {
            return Err(LdpError::InvalidWidth(width.bits()));
        }
        let n = width.bytes();
        self.ensure(n * 8)?;
        let v = self.bytes[self.cursor..self.cursor + n]
            .iter()
            .fold(0u64, |acc, b| (acc << 8) | *b as u64);
        self.cursor += n;
        Ok(v)
    }
}

/// Randomizer output `x̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LdpValue(pub u64);

impl fmt::Display for LdpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Real input in `[0, 1]` held as a fixed-point numerator over [`REAL_SCALE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RealInput(u64);

impl RealInput {
    pub fn from_scaled(n: u64) -> Result<Self, LdpError> {
        if n > REAL_SCALE {
            return Err(LdpError::InputOutOfDomain {
                x: n,
                lo: 0,
                hi: REAL_SCALE,
            });
        }
        Ok(Self(n))
    }

    /// Rounds to the nearest representable value.
    pub fn from_f64(x: f64) -> Result<Self, LdpError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(LdpError::Parse(x.to_string()));
        }
        Self::from_scaled((x * REAL_SCALE as f64).round() as u64)
    }

    pub fn scaled(self) -> u64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / REAL_SCALE as f64
    }
}

impl FromStr for RealInput {
    type Err = LdpError;

    /// Exact decimal parse with at most nine fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || LdpError::Parse(s.to_string());
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if frac.len() > 9 || (int.is_empty() && frac.is_empty()) {
            return Err(err());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let frac_val: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse::<u64>().map_err(|_| err())? * 10u64.pow(9 - frac.len() as u32)
        };
        let scaled = int
            .checked_mul(REAL_SCALE)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(err)?;
        Self::from_scaled(scaled)
    }
}

impl fmt::Display for RealInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let frac = format!("{:09}", self.0 % REAL_SCALE);
        let frac = frac.trim_end_matches('0');
        write!(f, "{}.{}", self.0 / REAL_SCALE, if frac.is_empty() { "0" } else { frac })
    }
}

/// A randomizer usable inside the proof relations: it declares its tape size
/// up front and is a pure function of `(input, tape)`.
///
/// Inputs are carried as `u64` so they can be signed with a fixed-width
/// encoding: the fixed-point numerator for reals, the category for histograms.
pub trait Randomizer {
    fn required_tape_bits(&self) -> usize;

    fn input_domain(&self) -> RangeInclusive<u64>;

    fn output_domain(&self) -> RangeInclusive<u64>;

    fn apply(&self, x: u64, tape: &mut RandomTape) -> Result<LdpValue, LdpError>;

    fn check_input(&self, x: u64) -> Result<(), LdpError> {
        let d = self.input_domain();
        if d.contains(&x) {
            Ok(())
        } else {
            Err(LdpError::InputOutOfDomain {
                x,
                lo: *d.start(),
                hi: *d.end(),
            })
        }
    }

    fn required_tape_bytes(&self) -> usize {
        self.required_tape_bits().div_ceil(8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomizerConfig {
    pub kind: RandomizerKind,
    /// Precision level (reals) or category count (histogram).
    pub k: u64,
    pub gamma: Probability,
    pub width: SampleWidth,
}

impl RandomizerConfig {
    pub fn new(kind: RandomizerKind, k: u64, gamma: Probability, width: SampleWidth) -> Result<Self, LdpError> {
        let min_k = match kind {
            RandomizerKind::Reals => 1,
            RandomizerKind::Histogram => 2,
        };
        // The output range must fit into one uniform sample.
        let span = match kind {
            RandomizerKind::Reals => k as u128 + 1,
            RandomizerKind::Histogram => k as u128,
        };
        if !width.is_standard() {
            return Err(LdpError::InvalidWidth(width.bits()));
        }
        if k < min_k || span > width.modulus() {
            return Err(LdpError::InvalidK { kind, k });
        }
        Ok(Self { kind, k, gamma, width })
    }

    pub fn reals(k: u64, gamma: Probability) -> Result<Self, LdpError> {
        Self::new(RandomizerKind::Reals, k, gamma, SampleWidth::W64)
    }

    pub fn histogram(k: u64, gamma: Probability) -> Result<Self, LdpError> {
        Self::new(RandomizerKind::Histogram, k, gamma, SampleWidth::W64)
    }

    pub fn with_width(self, width: SampleWidth) -> Result<Self, LdpError> {
        Self::new(self.kind, self.k, self.gamma, width)
    }
}

/// Reals: three samples (`3ℓ` bits). Histogram: two samples (`2ℓ` bits).
pub fn required_tape_bits(config: &RandomizerConfig) -> usize {
    let samples = match config.kind {
        RandomizerKind::Reals => 3,
        RandomizerKind::Histogram => 2,
    };
    samples * config.width.bits() as usize
}

impl Randomizer for RandomizerConfig {
    fn required_tape_bits(&self) -> usize {
        required_tape_bits(self)
    }

    fn input_domain(&self) -> RangeInclusive<u64> {
        match self.kind {
            RandomizerKind::Reals => 0..=REAL_SCALE,
            RandomizerKind::Histogram => 1..=self.k,
        }
    }

    fn output_domain(&self) -> RangeInclusive<u64> {
        match self.kind {
            RandomizerKind::Reals => 0..=self.k,
            RandomizerKind::Histogram => 1..=self.k,
        }
    }

    fn apply(&self, x: u64, tape: &mut RandomTape) -> Result<LdpValue, LdpError> {
        match self.kind {
            RandomizerKind::Reals => ldp_apply_real(RealInput::from_scaled(x)?, self, tape),
            RandomizerKind::Histogram => ldp_apply_hist(x, self, tape),
        }
    }
}

/// Reals randomizer on tape slices `(ρ₁, ρ₂, ρ₃)`.
///
/// `x̄ = floor(xk) + Ber~(xk - floor(xk); ρ₁)`, then `Ber~(γ; ρ₂)` selects
/// between `x̄` and `Unif~([0, k]; ρ₃)`. When `xk` is an integer the encoding
/// is exact and `ρ₁` is ignored; otherwise `x = 1` could encode to `k + 1`.
pub fn ldp_apply_real(x: RealInput, config: &RandomizerConfig, tape: &mut RandomTape) -> Result<LdpValue, LdpError> {
    let w = config.width;
    tape.ensure(3 * w.bits() as usize)?;
    let rho1 = tape.next_sample(w)?;
    let rho2 = tape.next_sample(w)?;
    let rho3 = tape.next_sample(w)?;

    let xk = x.scaled() as u128 * config.k as u128;
    let floor = (xk / REAL_SCALE as u128) as u64;
    let rem = (xk % REAL_SCALE as u128) as u64;
    let encoded = if rem == 0 {
        floor
    } else {
        let frac = Probability::new(rem, REAL_SCALE)?;
        floor + approx_bernoulli(frac, rho1, w) as u64
    };

    if approx_bernoulli(config.gamma, rho2, w) {
        approx_uniform(0, config.k, rho3, w).map(LdpValue)
    } else {
        Ok(LdpValue(encoded))
    }
}

/// Histogram randomizer on tape slices `(ρ₁, ρ₂)`: keeps `x` unless
/// `Ber~(γ; ρ₁)` fires, in which case it returns `Unif~([1, k]; ρ₂)`.
pub fn ldp_apply_hist(x: u64, config: &RandomizerConfig, tape: &mut RandomTape) -> Result<LdpValue, LdpError> {
    if !(1..=config.k).contains(&x) {
        return Err(LdpError::InputOutOfDomain { x, lo: 1, hi: config.k });
    }
    let w = config.width;
    tape.ensure(2 * w.bits() as usize)?;
    let rho1 = tape.next_sample(w)?;
    let rho2 = tape.next_sample(w)?;
    if approx_bernoulli(config.gamma, rho1, w) {
        approx_uniform(1, config.k, rho2, w).map(LdpValue)
    } else {
        Ok(LdpValue(x))
    }
}

/// Counts per bin; index 0 is bin 1.
pub fn aggregate_hist(values: &[LdpValue], k: u64) -> Result<Vec<u64>, LdpError> {
    let mut counts = vec![0u64; k as usize];
    for v in values {
        if !(1..=k).contains(&v.0) {
            return Err(LdpError::ValueOutOfDomain { value: v.0, lo: 1, hi: k });
        }
        counts[(v.0 - 1) as usize] += 1;
    }
    Ok(counts)
}

/// Estimate of `Σ x_i`: `(1/(1-γ)) · (Σ x̃_i / k - γn/2)`.
pub fn aggregate_real_debias(values: &[LdpValue], k: u64, gamma: Probability, n: usize) -> Result<f64, LdpError> {
    if values.len() != n {
        return Err(LdpError::CountMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if gamma.is_one() {
        return Err(LdpError::NoSignal);
    }
    let mut sum = 0u128;
    for v in values {
        if v.0 > k {
            return Err(LdpError::ValueOutOfDomain { value: v.0, lo: 0, hi: k });
        }
        sum += v.0 as u128;
    }
    let g = gamma.to_f64();
    Ok((sum as f64 / k as f64 - g * n as f64 / 2.0) / (1.0 - g))
}

/// Exact form of [`aggregate_real_debias`] for a rational output sum.
pub fn debias_exact(sum: &BigRational, k: u64, gamma: Probability, n: u64) -> Result<BigRational, LdpError> {
    if gamma.is_one() {
        return Err(LdpError::NoSignal);
    }
    let g = gamma.to_big();
    let k = BigRational::from_integer(k.into());
    let n = BigRational::from_integer(n.into());
    let two = BigRational::from_integer(2.into());
    Ok((sum / k - &g * n / two) / (BigRational::one() - g))
}

/// Closed-form output masses of the approximate samplers and randomizers.
pub mod masses {
    use super::*;

    fn pow2(bits: u32) -> BigRational {
        BigRational::from_integer(BigInt::from(BigUint::one() << bits))
    }

    /// `P[Ber~(p) = 1] = (floor(p(2^ℓ-1)) + 1) / 2^ℓ`.
    pub fn bernoulli_one(p: Probability, width: SampleWidth) -> BigRational {
        BigRational::from_integer((p.threshold(width) as u128 + 1).into()) / pow2(width.bits())
    }

    /// Masses of `Unif~([lb, ub])`, index 0 is `lb`.
    pub fn uniform(lb: u64, ub: u64, width: SampleWidth) -> Result<Vec<BigRational>, LdpError> {
        let delta = uniform_delta(lb, ub, width)?;
        let m = pow2(width.bits());
        let span = (ub - lb) as u128;
        let mut out: Vec<BigRational> = (0..span)
            .map(|_| BigRational::from_integer(delta.into()) / &m)
            .collect();
        out.push(BigRational::from_integer((width.modulus() - span * delta).into()) / &m);
        Ok(out)
    }

    /// Total variation distance between `Unif~([lb, ub])` and the exact uniform.
    pub fn uniform_tv(lb: u64, ub: u64, width: SampleWidth) -> Result<BigRational, LdpError> {
        let ideal = BigRational::new(1.into(), ((ub - lb) as u128 + 1).into());
        let sum = uniform(lb, ub, width)?
            .into_iter()
            .fold(BigRational::zero(), |acc, m| acc + (m - &ideal).abs());
        Ok(sum / BigRational::from_integer(2.into()))
    }

    /// Output distribution of the approximate randomizer for input `x`;
    /// index 0 is the first element of the output domain.
    pub fn output(config: &RandomizerConfig, x: u64) -> Result<Vec<BigRational>, LdpError> {
        let w = config.width;
        let keep = BigRational::one() - bernoulli_one(config.gamma, w);
        let noise = bernoulli_one(config.gamma, w);
        match config.kind {
            RandomizerKind::Histogram => {
                config.check_input(x)?;
                let mut out: Vec<_> = uniform(1, config.k, w)?.into_iter().map(|m| m * &noise).collect();
                out[(x - 1) as usize] += keep;
                Ok(out)
            }
            RandomizerKind::Reals => {
                config.check_input(x)?;
                let mut out: Vec<_> = uniform(0, config.k, w)?.into_iter().map(|m| m * &noise).collect();
                for (value, mass) in encoding(config, x)? {
                    out[value as usize] += &keep * mass;
                }
                Ok(out)
            }
        }
    }

    /// Distribution of the fixed-point encoding `x̄` of a real input.
    pub fn encoding(config: &RandomizerConfig, x: u64) -> Result<Vec<(u64, BigRational)>, LdpError> {
        let xk = x as u128 * config.k as u128;
        let floor = (xk / REAL_SCALE as u128) as u64;
        let rem = (xk % REAL_SCALE as u128) as u64;
        if rem == 0 {
            return Ok(vec![(floor, BigRational::one())]);
        }
        let up = bernoulli_one(Probability::new(rem, REAL_SCALE)?, config.width);
        Ok(vec![(floor, BigRational::one() - &up), (floor + 1, up)])
    }

    /// Output distribution of the exact (unapproximated) randomizer.
    pub fn ideal_output(config: &RandomizerConfig, x: u64) -> Result<Vec<BigRational>, LdpError> {
        let g = config.gamma.to_big();
        let keep = BigRational::one() - &g;
        let (lo, hi) = (*config.output_domain().start(), *config.output_domain().end());
        let size = BigRational::from_integer(((hi - lo) as u128 + 1).into());
        let mut out = vec![&g / size; (hi - lo + 1) as usize];
        match config.kind {
            RandomizerKind::Histogram => {
                config.check_input(x)?;
                out[(x - 1) as usize] += keep;
            }
            RandomizerKind::Reals => {
                config.check_input(x)?;
                let xk = BigRational::new(BigInt::from(x as u128 * config.k as u128), BigInt::from(REAL_SCALE));
                let floor = xk.floor();
                let frac = &xk - &floor;
                let f = floor.to_integer().to_u64().expect("floor fits u64");
                out[f as usize] += &keep * (BigRational::one() - &frac);
                if !frac.is_zero() {
                    out[f as usize + 1] += &keep * frac;
                }
            }
        }
        Ok(out)
    }

    pub fn to_f64(masses: &[BigRational]) -> Vec<f64> {
        masses.iter().map(|m| m.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl Wire for RandomizerConfig {
    const TAG: Tag = Tag::RandomizerConfig;

    fn write_body(&self, w: &mut Writer) {
        w.put_u8(match self.kind {
            RandomizerKind::Reals => 1,
            RandomizerKind::Histogram => 2,
        });
        w.put_u64(self.k);
        w.put_u64(self.gamma.numer());
        w.put_u64(self.gamma.denom());
        w.put_u8(self.width.bits() as u8);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let kind = match r.get_u8()? {
            1 => RandomizerKind::Reals,
            2 => RandomizerKind::Histogram,
            _ => return Err(WireError::Invalid("randomizer kind")),
        };
        let k = r.get_u64()?;
        let gamma = Probability::new(r.get_u64()?, r.get_u64()?).map_err(|_| WireError::Invalid("gamma"))?;
        let width = SampleWidth::from_bits(r.get_u8()? as u32).map_err(|_| WireError::Invalid("sample width"))?;
        RandomizerConfig::new(kind, k, gamma, width).map_err(|_| WireError::Invalid("randomizer config"))
    }
}
