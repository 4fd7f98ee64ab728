use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vldp::harness::chi_square;
use vldp::shuffler::{permutation_rank, shuffle_batch, Batch, Shuffler};

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Frequencies of all `n!` orders over `trials` shuffles of `0..n`.
fn permutation_counts(n: usize, trials: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; factorial(n)];
    let base = Batch::new(1, (0..n as u8).map(|i| vec![i]).collect());
    for _ in 0..trials {
        let out = shuffle_batch(base.clone(), &mut rng);
        let perm: Vec<usize> = out.payloads.iter().map(|p| p[0] as usize).collect();
        counts[permutation_rank(&perm)] += 1;
    }
    counts
}

#[test]
fn uniform_over_permutations_n4() {
    let counts = permutation_counts(4, 100_000, 2024);
    let c = chi_square(&counts, &[1.0 / 24.0; 24], 0.01).unwrap();
    assert!(c.pass(), "{c:?}");
    // Each order within 3 sigma of trials / 24.
    let (mean, sd) = (100_000.0 / 24.0, (100_000.0f64 * (1.0 / 24.0) * (23.0 / 24.0)).sqrt());
    for (i, &k) in counts.iter().enumerate() {
        assert!((k as f64 - mean).abs() <= 3.0 * sd, "order {i}: {k}");
    }
}

#[test]
fn uniform_for_small_batches() {
    for n in 2..=5 {
        let m = factorial(n);
        let counts = permutation_counts(n, 400 * m, n as u64);
        let c = chi_square(&counts, &vec![1.0 / m as f64; m], 0.01).unwrap();
        assert!(c.pass(), "n={n}: {c:?}");
    }
}

#[test]
fn concurrent_submissions_all_arrive() {
    let s = Arc::new(Shuffler::new());
    let handles: Vec<_> = (0..8u8)
        .map(|t| {
            let s = Arc::clone(&s);
            std::thread::spawn(move || {
                for k in 0..50u8 {
                    s.submit(3, vec![t, k]);
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let batch = s.close(3, &mut ChaCha20Rng::seed_from_u64(0));
    assert_eq!(batch.len(), 400);
    let mut got = batch.payloads;
    got.sort();
    let mut want: Vec<Vec<u8>> = (0..8u8).flat_map(|t| (0..50u8).map(move |k| vec![t, k])).collect();
    want.sort();
    assert_eq!(got, want);
}

proptest! {
    #[test]
    fn multiset_and_bytes_preserved(payloads in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 0..30), seed in any::<u64>()) {
        let out = shuffle_batch(Batch::new(7, payloads.clone()), &mut ChaCha20Rng::seed_from_u64(seed));
        prop_assert_eq!(out.interval, 7);
        let (mut a, mut b) = (out.payloads, payloads);
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
