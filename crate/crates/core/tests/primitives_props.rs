use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vldp::primitives::{
    commit, commit_verify, merkle_build, merkle_verify, prf_eval, prg_expand, sig_verify, Blinding, Commitment,
    MerklePath, MerkleRoot, PrfKey, PrfOutput, PublicKey, Signature, SigningKeyPair, Wire,
};

#[test]
fn prg_bit_frequencies_within_three_sigma() {
    let key = PrfKey::random(&mut ChaCha20Rng::seed_from_u64(11));
    let n = 10_000u64;
    let inputs: Vec<[u8; 8]> = (1..=n).map(|j| j.to_be_bytes()).collect();
    let refs: Vec<&[u8]> = inputs.iter().map(|s| s.as_slice()).collect();
    let blocks = prg_expand(&key, &refs).unwrap();
    let mut ones = [0u64; 256];
    for b in &blocks {
        for (i, byte) in b.0.iter().enumerate() {
            for bit in 0..8 {
                ones[i * 8 + bit] += ((byte >> bit) & 1) as u64;
            }
        }
    }
    let sigma = (n as f64 * 0.25).sqrt();
    let worst = ones.iter().map(|&c| (c as f64 - n as f64 / 2.0).abs()).fold(0.0, f64::max);
    // Each position is checked at 3 sigma. Over 256 positions about 0.7
    // excursions are expected, and P(count >= 4) < 0.01 under Binomial(256,
    // 0.0027). Separately, no position may exceed the Bonferroni bound for
    // alpha = 0.01 (two-sided), z = 4.11.
    let outside = ones.iter().filter(|&&c| (c as f64 - n as f64 / 2.0).abs() > 3.0 * sigma).count();
    assert!(outside <= 3, "{outside} positions outside 3 sigma");
    assert!(worst <= 4.11 * sigma, "worst deviation {worst}");
}

proptest! {
    #[test]
    fn prf_is_pure(key in any::<[u8; 32]>(), input in prop::collection::vec(any::<u8>(), 0..64)) {
        let k = PrfKey(key);
        prop_assert_eq!(prf_eval(&k, &input), prf_eval(&k, &input));
    }

    #[test]
    fn byte_types_round_trip(a in any::<[u8; 32]>(), s in prop::collection::vec(any::<u8>(), 64)) {
        prop_assert_eq!(PrfKey::from_bytes(&PrfKey(a).to_bytes()).unwrap(), PrfKey(a));
        prop_assert_eq!(PrfOutput::from_bytes(&PrfOutput(a).to_bytes()).unwrap(), PrfOutput(a));
        prop_assert_eq!(Commitment::from_bytes(&Commitment(a).to_bytes()).unwrap(), Commitment(a));
        prop_assert_eq!(Blinding::from_bytes(&Blinding(a).to_bytes()).unwrap(), Blinding(a));
        prop_assert_eq!(PublicKey::from_bytes(&PublicKey(a).to_bytes()).unwrap(), PublicKey(a));
        prop_assert_eq!(MerkleRoot::from_bytes(&MerkleRoot(a).to_bytes()).unwrap(), MerkleRoot(a));
        let sig = Signature(s.try_into().unwrap());
        prop_assert_eq!(Signature::from_bytes(&sig.to_bytes()).unwrap(), sig);
    }

    #[test]
    fn decoding_garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..120)) {
        let _ = Signature::from_bytes(&bytes);
        let _ = MerklePath::from_bytes(&bytes);
        let _ = Commitment::from_bytes(&bytes);
    }

    #[test]
    fn commitment_round_trip(v in prop::collection::vec(any::<u8>(), 0..64), r in any::<[u8; 32]>()) {
        let cm = commit(&v, &Blinding(r));
        prop_assert!(commit_verify(&cm, &v, &Blinding(r)));
    }

    #[test]
    fn signatures_round_trip(seed in any::<[u8; 32]>(), m in prop::collection::vec(any::<u8>(), 0..48)) {
        let kp = SigningKeyPair::from_seed(seed);
        prop_assert!(sig_verify(&kp.public(), &kp.sign(&m), &m));
    }

    #[test]
    fn merkle_paths_verify_only_at_their_index(n in 1usize..20, seed in any::<u8>()) {
        let leaves: Vec<_> = (0..n).map(|i| Commitment([seed.wrapping_add(i as u8); 32])).collect();
        let tree = merkle_build(&leaves, vldp::primitives::depth_for_leaves(n)).unwrap();
        for (j, leaf) in leaves.iter().enumerate() {
            let path = tree.path(j).unwrap();
            prop_assert!(merkle_verify(&tree.root(), leaf, j, &path));
            let other = (j + 1) % tree.capacity();
            if tree.leaf(other) != Some(leaf) {
                prop_assert!(!merkle_verify(&tree.root(), leaf, other, &path));
            }
        }
    }
}
