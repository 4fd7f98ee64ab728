//! Trusted in-process shuffler: one batch per interval, emitted in uniformly
//! random order.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;

/// Opaque submissions for one interval.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Batch {
    pub interval: u32,
    pub payloads: Vec<Vec<u8>>,
}

impl Batch {
    pub fn new(interval: u32, payloads: Vec<Vec<u8>>) -> Self {
        Self { interval, payloads }
    }

    pub fn len(&self) -> usize {
        self.payloads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payloads.is_empty()
    }
}

/// Fisher–Yates permutation of a closed batch. Payload bytes are untouched.
pub fn shuffle_batch<R: Rng + ?Sized>(mut batch: Batch, rng: &mut R) -> Batch {
    batch.payloads.shuffle(rng);
    batch
}

/// Collects submissions concurrently and releases each interval once.
#[derive(Debug, Default)]
pub struct Shuffler {
    open: Mutex<HashMap<u32, Vec<Vec<u8>>>>,
}

impl Shuffler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn submit(&self, interval: u32, payload: Vec<u8>) {
        self.open
            .lock()
            .expect("shuffler lock poisoned")
            .entry(interval)
            .or_default()
            .push(payload);
    }

    pub fn pending(&self, interval: u32) -> usize {
        self.open
            .lock()
            .expect("shuffler lock poisoned")
            .get(&interval)
            .map_or(0, Vec::len)
    }

    /// Closes the interval and returns its shuffled batch. Later submissions
    /// for the same interval start a new batch.
    pub fn close<R: Rng + ?Sized>(&self, interval: u32, rng: &mut R) -> Batch {
        let payloads = self
            .open
            .lock()
            .expect("shuffler lock poisoned")
            .remove(&interval)
            .unwrap_or_default();
        shuffle_batch(Batch::new(interval, payloads), rng)
    }
}

/// Rank of a permutation of `0..n` in lexicographic order (Lehmer code).
pub fn permutation_rank(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn batch(n: u8) -> Batch {
        Batch::new(1, (0..n).map(|i| vec![i, i ^ 0xff]).collect())
    }

    #[test]
    fn singleton_and_empty_batches() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(shuffle_batch(batch(1), &mut rng), batch(1));
        assert_eq!(shuffle_batch(batch(0), &mut rng), batch(0));
    }

    #[test]
    fn seeded_shuffles_repeat() {
        let a = shuffle_batch(batch(3), &mut ChaCha20Rng::seed_from_u64(9));
        let b = shuffle_batch(batch(3), &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn multiset_preserved() {
        let out = shuffle_batch(batch(50), &mut ChaCha20Rng::seed_from_u64(1));
        let mut sorted = out.payloads.clone();
        sorted.sort();
        assert_eq!(sorted, batch(50).payloads);
    }

    #[test]
    fn shuffler_closes_per_interval() {
        let s = Shuffler::new();
        s.submit(1, vec![1]);
        s.submit(2, vec![2]);
        s.submit(1, vec![3]);
        assert_eq!(s.pending(1), 2);
        let b = s.close(1, &mut ChaCha20Rng::seed_from_u64(2));
        assert_eq!(b.interval, 1);
        assert_eq!(b.len(), 2);
        assert_eq!(s.pending(1), 0);
        assert_eq!(s.pending(2), 1);
    }

    #[test]
    fn ranks_are_a_bijection() {
        assert_eq!(permutation_rank(&[0, 1, 2]), 0);
        assert_eq!(permutation_rank(&[2, 1, 0]), 5);
        let mut seen = std::collections::HashSet::new();
        let mut p = [0usize, 1, 2, 3];
        for _ in 0..200 {
            p.shuffle(&mut ChaCha20Rng::seed_from_u64(seen.len() as u64));
            seen.insert(permutation_rank(&p));
        }
        assert!(seen.iter().all(|&r| r < 24));
    }
}
