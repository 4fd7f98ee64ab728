//! Randomizer checks against brute-force enumeration and exact rational
//! oracles written independently of the library's closed forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vldp::ldp::{
    aggregate_hist, aggregate_real_debias, approx_bernoulli, approx_uniform, debias_exact, gamma_from_epsilon,
    ldp_apply_hist, ldp_apply_real, masses, LdpValue, Probability, RandomTape, Randomizer, RandomizerConfig,
    RandomizerKind, RealInput, SampleWidth, REAL_SCALE,
};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn p(n: u64, d: u64) -> Probability {
    Probability::new(n, d).unwrap()
}

fn w(bits: u32) -> SampleWidth {
    SampleWidth::new(bits).unwrap()
}

// Oracle: rho <= floor(g * (2^l - 1)) iff rho * den <= num * (2^l - 1).
fn oracle_bernoulli(g: Probability, rho: u64, bits: u32) -> bool {
    let max = (1u128 << bits) - 1;
    rho as u128 * g.denom() as u128 <= g.numer() as u128 * max
}

// Oracle: the bucket scan written out literally.
fn oracle_uniform(lb: u64, ub: u64, rho: u64, bits: u32) -> u64 {
    let delta = (1u128 << bits) / (ub - lb + 1) as u128;
    for j in 0..(ub - lb) as u128 {
        if j * delta <= rho as u128 && (rho as u128) < (j + 1) * delta {
            return lb + j as u64;
        }
    }
    ub
}

fn tape(samples: &[u64], width: SampleWidth) -> RandomTape {
    let n = width.bytes();
    RandomTape::new(samples.iter().flat_map(|s| s.to_be_bytes()[8 - n..].to_vec()).collect())
}

fn tv(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + (x - y).abs()) / q(2, 1)
}

#[test]
fn bernoulli_exhaustive_l8_matches_closed_form() {
    let gammas = [p(0, 1), p(1, 1), p(1, 2), p(1, 3), p(7, 10), p(255, 256), p(1, 255)];
    for g in gammas {
        let count = (0..256u64).filter(|&r| approx_bernoulli(g, r, SampleWidth::W8)).count();
        let oracle = (0..256u64).filter(|&r| oracle_bernoulli(g, r, 8)).count();
        assert_eq!(count, oracle, "{g}");
        assert_eq!(q(count as i64, 256), masses::bernoulli_one(g, SampleWidth::W8), "{g}");
    }
    assert_eq!((0..256u64).filter(|&r| approx_bernoulli(p(1, 2), r, SampleWidth::W8)).count(), 128);
}

#[test]
fn uniform_exhaustive_l8_matches_closed_form() {
    for (lb, ub) in [(0u64, 1u64), (0, 2), (0, 10), (1, 8), (3, 7), (0, 255), (5, 200)] {
        let mut counts = vec![0i64; (ub - lb + 1) as usize];
        for r in 0..256u64 {
            let v = approx_uniform(lb, ub, r, SampleWidth::W8).unwrap();
            assert_eq!(v, oracle_uniform(lb, ub, r, 8));
            counts[(v - lb) as usize] += 1;
        }
        let closed = masses::uniform(lb, ub, SampleWidth::W8).unwrap();
        let brute: Vec<_> = counts.iter().map(|&c| q(c, 256)).collect();
        assert_eq!(brute, closed, "[{lb},{ub}]");
    }
}

#[test]
fn uniform_small_width_examples() {
    let m = masses::uniform(0, 2, w(3)).unwrap();
    assert_eq!(m, vec![q(2, 8), q(2, 8), q(4, 8)]);
    let brute: Vec<u64> = (0..8).map(|r| approx_uniform(0, 2, r, w(3)).unwrap()).collect();
    assert_eq!(brute, vec![0, 0, 1, 1, 2, 2, 2, 2]);
    assert_eq!(masses::uniform_tv(0, 2, w(3)).unwrap(), q(1, 6));

    assert_eq!(masses::uniform(0, 3, w(2)).unwrap(), vec![q(1, 4); 4]);
    assert!(masses::uniform_tv(0, 3, w(2)).unwrap().is_zero());
}

#[test]
fn uniform_l64_deviation_below_2_pow_minus_60() {
    let m = masses::uniform(0, 10, SampleWidth::W64).unwrap();
    let bound = BigRational::new(BigInt::one(), BigInt::one() << 60);
    for mass in m {
        assert!((mass - q(1, 11)).abs() < bound);
    }
}

#[test]
fn total_variation_decreases_with_width() {
    for (lb, ub) in [(0u64, 2u64), (0, 10), (1, 8 + 1), (0, 100)] {
        let tvs: Vec<_> = SampleWidth::STANDARD
            .iter()
            .map(|&w| masses::uniform_tv(lb, ub, w).unwrap())
            .collect();
        assert!(tvs.windows(2).all(|t| t[1] < t[0]), "[{lb},{ub}]: {tvs:?}");
    }
    for g in [p(1, 3), p(7, 10), p(1, 1000)] {
        let gaps: Vec<_> = SampleWidth::STANDARD
            .iter()
            .map(|&w| (masses::bernoulli_one(g, w) - g.to_big()).abs())
            .collect();
        assert!(gaps.windows(2).all(|t| t[1] < t[0]), "{g}");
    }
    // Whole randomizer against the ideal one.
    for (kind, k, x) in [
        (RandomizerKind::Reals, 10, 333_333_333),
        (RandomizerKind::Histogram, 6, 2),
    ] {
        let tvs: Vec<_> = SampleWidth::STANDARD
            .iter()
            .map(|&w| {
                let cfg = RandomizerConfig::new(kind, k, p(1, 3), w).unwrap();
                tv(&masses::output(&cfg, x).unwrap(), &masses::ideal_output(&cfg, x).unwrap())
            })
            .collect();
        assert!(tvs.windows(2).all(|t| t[1] < t[0]), "{kind}: {tvs:?}");
    }
}

#[test]
fn histogram_exhaustive_l8_matches_closed_form() {
    for g in [p(1, 1), p(1, 2), p(1, 3)] {
        let cfg = RandomizerConfig::histogram(8, g).unwrap().with_width(SampleWidth::W8).unwrap();
        for x in 1..=8 {
            let mut counts = vec![0i64; 8];
            for r1 in 0..256u64 {
                for r2 in 0..256u64 {
                    let v = ldp_apply_hist(x, &cfg, &mut tape(&[r1, r2], SampleWidth::W8)).unwrap();
                    counts[(v.0 - 1) as usize] += 1;
                }
            }
            let brute: Vec<_> = counts.iter().map(|&c| q(c, 65536)).collect();
            assert_eq!(brute, masses::output(&cfg, x).unwrap(), "gamma {g}, x {x}");
            if g.is_one() {
                assert_eq!(brute, masses::uniform(1, 8, SampleWidth::W8).unwrap());
            }
        }
    }
}

#[test]
fn reals_exhaustive_l8_matches_closed_form() {
    let cfg = RandomizerConfig::reals(10, p(1, 3)).unwrap().with_width(SampleWidth::W8).unwrap();
    let x = 250_000_000;
    let mut counts = vec![0i64; 11];
    let mut bytes = vec![0u8; 3];
    for r in 0..(1u32 << 24) {
        bytes.copy_from_slice(&r.to_be_bytes()[1..]);
        let v = cfg.apply(x, &mut RandomTape::new(bytes.clone())).unwrap();
        counts[v.0 as usize] += 1;
    }
    let brute: Vec<_> = counts.iter().map(|&c| q(c, 1 << 24)).collect();
    assert_eq!(brute, masses::output(&cfg, x).unwrap());
}

#[test]
fn real_encoding_unbiased_on_dyadic_grid() {
    // gamma = 0 with rho_2 != 0 exposes the encoding x_bar directly.
    let cfg = RandomizerConfig::reals(10, p(0, 1)).unwrap().with_width(SampleWidth::W8).unwrap();
    let step = REAL_SCALE / 2560;
    for i in 0..=2560u64 {
        let x = RealInput::from_scaled(i * step).unwrap();
        let total: u64 = (0..256u64)
            .map(|r1| ldp_apply_real(x, &cfg, &mut tape(&[r1, 1, 0], SampleWidth::W8)).unwrap().0)
            .sum();
        // E[x_bar / k] = total / (256 k) must equal x = i / 2560.
        assert_eq!(q(total as i64, 256 * 10), q(i as i64, 2560), "x = {i}/2560");
    }
}

#[test]
fn debias_is_exact_on_ideal_expectation() {
    let g = p(2, 7);
    for (k, xs) in [(10u64, vec![0u64, 250_000_000, 1_000_000_000, 123_456_789]), (3, vec![500_000_000; 5])] {
        let cfg = RandomizerConfig::reals(k, g).unwrap();
        let mut expected_sum = BigRational::zero();
        let mut true_sum = BigRational::zero();
        for &x in &xs {
            let m = masses::ideal_output(&cfg, x).unwrap();
            expected_sum += m.iter().enumerate().fold(BigRational::zero(), |acc, (v, mass)| acc + q(v as i64, 1) * mass);
            true_sum += q(x as i64, REAL_SCALE as i64);
        }
        assert_eq!(debias_exact(&expected_sum, k, g, xs.len() as u64).unwrap(), true_sum);
    }
}

#[test]
fn debias_is_exact_on_approximate_expectation_when_masses_are_exact() {
    // k + 1 = 8 divides 2^8, gamma = 1/2 is representable, x = j/256 keeps the
    // encoding dyadic: the approximate randomizer then has the ideal masses.
    let g = p(1, 2);
    let cfg = RandomizerConfig::reals(7, g).unwrap().with_width(SampleWidth::W8).unwrap();
    let xs: Vec<u64> = (0..=256u64).map(|j| j * (REAL_SCALE / 256)).collect();
    let mut expected_sum = BigRational::zero();
    for &x in &xs {
        let m = masses::output(&cfg, x).unwrap();
        assert_eq!(m, masses::ideal_output(&cfg, x).unwrap());
        expected_sum += m.iter().enumerate().fold(BigRational::zero(), |acc, (v, mass)| acc + q(v as i64, 1) * mass);
    }
    let true_sum = xs.iter().fold(BigRational::zero(), |acc, &x| acc + q(x as i64, REAL_SCALE as i64));
    assert_eq!(debias_exact(&expected_sum, 7, g, xs.len() as u64).unwrap(), true_sum);
}

fn random_tape(rng: &mut ChaCha20Rng, bytes: usize) -> RandomTape {
    let mut b = vec![0u8; bytes];
    rng.fill_bytes(&mut b);
    RandomTape::new(b)
}

#[test]
fn monte_carlo_debias_within_tolerance() {
    let (n, k, g) = (10_000usize, 10u64, p(1, 2));
    let cfg = RandomizerConfig::reals(k, g).unwrap();
    let x = 500_000_000;

    // Oracle: the estimator is linear in the outputs, so its standard
    // deviation divided by n is sd(x_tilde) / (k (1 - gamma) sqrt n).
    let m = masses::to_f64(&masses::output(&cfg, x).unwrap());
    let mean: f64 = m.iter().enumerate().map(|(v, p)| v as f64 * p).sum();
    let var: f64 = m.iter().enumerate().map(|(v, p)| (v as f64 - mean).powi(2) * p).sum();
    let sd = var.sqrt() / (k as f64 * (1.0 - g.to_f64()) * (n as f64).sqrt());
    let z99 = 2.576;
    assert!(z99 * sd < 0.02, "tolerance too tight for sd {sd}");

    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let values: Vec<LdpValue> = (0..n)
        .map(|_| cfg.apply(x, &mut random_tape(&mut rng, cfg.required_tape_bytes())).unwrap())
        .collect();
    let est = aggregate_real_debias(&values, k, g, n).unwrap() / n as f64;
    assert!((est - 0.5).abs() <= 0.02, "estimate {est}");
}

#[test]
fn histogram_frequency_within_three_sigma() {
    let cfg = RandomizerConfig::histogram(8, p(1, 2)).unwrap();
    let n = 10_000;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let values: Vec<_> = (0..n)
        .map(|_| cfg.apply(3, &mut random_tape(&mut rng, cfg.required_tape_bytes())).unwrap())
        .collect();
    let counts = aggregate_hist(&values, 8).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), n as u64);
    let pm = masses::output(&cfg, 3).unwrap()[2].to_f64().unwrap();
    let sigma = (n as f64 * pm * (1.0 - pm)).sqrt();
    assert!((counts[2] as f64 - n as f64 * pm).abs() <= 3.0 * sigma);
}

#[test]
fn gamma_examples() {
    assert_eq!(gamma_from_epsilon(12f64.ln(), 10, RandomizerKind::Reals).unwrap(), p(11, 22));
    assert_eq!(gamma_from_epsilon(0.0, 10, RandomizerKind::Reals).unwrap(), p(11, 11));
}

fn arb_config() -> impl Strategy<Value = RandomizerConfig> {
    (
        prop_oneof![Just(RandomizerKind::Reals), Just(RandomizerKind::Histogram)],
        2u64..300,
        0u64..=1000,
        prop::sample::select(SampleWidth::STANDARD.to_vec()),
    )
        .prop_filter_map("k must fit width", |(kind, k, g, w)| {
            RandomizerConfig::new(kind, k, p(g, 1000), w).ok()
        })
}

proptest! {
    #[test]
    fn outputs_stay_in_domain(cfg in arb_config(), xr in any::<u64>(), bytes in prop::collection::vec(any::<u8>(), 24)) {
        let dom = cfg.input_domain();
        let x = dom.start() + xr % (dom.end() - dom.start() + 1);
        let t = RandomTape::new(bytes[..cfg.required_tape_bytes()].to_vec());
        let a = cfg.apply(x, &mut t.clone()).unwrap();
        let b = cfg.apply(x, &mut t.clone()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(cfg.output_domain().contains(&a.0));
    }

    #[test]
    fn real_boundaries_stay_in_domain(k in 1u64..1000, g in 0u64..=10, r in any::<[u64; 3]>()) {
        let cfg = RandomizerConfig::reals(k, p(g, 10)).unwrap();
        for x in [0, REAL_SCALE] {
            let v = cfg.apply(x, &mut tape(&r, SampleWidth::W64)).unwrap();
            prop_assert!(v.0 <= k);
        }
    }

    #[test]
    fn samplers_agree_with_oracles(bits in 1u32..=64, a in any::<u64>(), span in 1u64..1000, rho in any::<u64>(), num in 0u64..=1000) {
        let width = w(bits);
        let rho = rho & width.max_value();
        prop_assume!((span as u128) < width.modulus());
        let lb = a % (u64::MAX - span);
        prop_assert_eq!(approx_uniform(lb, lb + span, rho, width).unwrap(), oracle_uniform(lb, lb + span, rho, bits));
        prop_assert_eq!(approx_bernoulli(p(num, 1000), rho, width), oracle_bernoulli(p(num, 1000), rho, bits));
    }

    #[test]
    fn config_wire_round_trip(cfg in arb_config()) {
        use vldp::primitives::Wire;
        prop_assert_eq!(RandomizerConfig::from_bytes(&cfg.to_bytes()).unwrap(), cfg);
    }

    #[test]
    fn text_round_trips(n in 0u64..=REAL_SCALE, num in 0u64..100, extra in 0u64..100) {
        let x = RealInput::from_scaled(n).unwrap();
        prop_assert_eq!(x.to_string().parse::<RealInput>().unwrap(), x);
        let g = p(num, num + extra.max(1));
        prop_assert_eq!(g.to_string().parse::<Probability>().unwrap(), g);
    }
}
