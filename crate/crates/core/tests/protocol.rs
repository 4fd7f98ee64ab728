use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vldp::harness::{default_randomizer, exp_completeness, genrand_for, Fixture};
use vldp::ldp::{Probability, Randomizer, RandomizerConfig};
use vldp::primitives::{sig_verify, Wire};
use vldp::protocol::{
    genrand_request, instance, randomize, GenRandResponse, PublicParams, RandomnessBundle, Rejection, Scheme,
    ABORT_BRANCHES,
};
use vldp::relations::{sigma_s_preimage_shuffle, Statement};

const SCHEMES: [Scheme; 3] = [Scheme::Base, Scheme::Expand, Scheme::Shuffle];

#[test]
fn completeness_all_schemes_t5_n20() {
    for scheme in SCHEMES {
        let r = exp_completeness(scheme, 20, 5, 11).unwrap();
        assert_eq!((r.accepted, r.rejected, r.trials), (100, 0, 100), "{scheme}");
        assert!(r.pass && r.tallies_consistent());
    }
}

#[test]
fn completeness_is_deterministic() {
    let a = exp_completeness(Scheme::Expand, 4, 3, 99).unwrap();
    let b = exp_completeness(Scheme::Expand, 4, 3, 99).unwrap();
    assert_eq!(a.to_kv(), b.to_kv());
}

#[test]
fn reals_randomizer_end_to_end() {
    let cfg = RandomizerConfig::reals(10, Probability::new(1, 2).unwrap()).unwrap();
    for scheme in SCHEMES {
        let mut fx = Fixture::new(scheme, 2, 3, cfg, 4).unwrap();
        let bundle = fx.genrand(0, 3).unwrap();
        let input = fx.sign_in_window(0, 3, 1_000_000_000).unwrap();
        let out = randomize(&fx.pp, fx.server.ek(), 3, &bundle, &input).unwrap();
        assert!(cfg.output_domain().contains(&out.x_tilde.0));
        assert_eq!(fx.server.verify(3, &out), Ok(out.x_tilde));
    }
}

#[test]
fn replay_guards() {
    // Base keys L by (pk, j): other intervals remain available.
    let mut fx = Fixture::new(Scheme::Base, 1, 3, default_randomizer(), 1).unwrap();
    fx.genrand(0, 1).unwrap();
    fx.genrand(0, 2).unwrap();
    assert_eq!(
        fx.genrand(0, 1).unwrap_err(),
        vldp::protocol::ProtocolError::Rejected(Rejection::Replay)
    );
    assert_eq!(fx.server.consumed_len(), 2);
    // Expand and Shuffle allow one GenRand per client.
    for scheme in [Scheme::Expand, Scheme::Shuffle] {
        let mut fx = Fixture::new(scheme, 1, 3, default_randomizer(), 1).unwrap();
        fx.genrand(0, 1).unwrap();
        assert!(fx.genrand(0, 2).is_err());
    }
}

#[test]
fn expand_tree_has_padded_leaves() {
    let mut fx = Fixture::new(Scheme::Expand, 1, 5, default_randomizer(), 2).unwrap();
    match fx.genrand(0, 1).unwrap() {
        RandomnessBundle::Expand { tree, rho_c, .. } => {
            assert_eq!(tree.depth(), 4);
            assert_eq!(tree.capacity(), 8);
            assert_eq!(rho_c.len(), 5);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn shuffle_sigma_s_binds_pk_cm_and_k_s() {
    let mut fx = Fixture::new(Scheme::Shuffle, 1, 2, default_randomizer(), 3).unwrap();
    let RandomnessBundle::Shuffle { pk, cm_kc, k_s, sigma_s, .. } = fx.genrand(0, 1).unwrap() else {
        panic!()
    };
    let pk_s = fx.server.pk_s();
    assert!(sig_verify(&pk_s, &sigma_s, &sigma_s_preimage_shuffle(&pk, &cm_kc, &k_s)));
    let mut other = k_s;
    other.0[31] ^= 1;
    assert!(!sig_verify(&pk_s, &sigma_s, &sigma_s_preimage_shuffle(&pk, &cm_kc, &other)));
}

#[test]
fn shuffle_submissions_are_structurally_identical() {
    let mut fx = Fixture::new(Scheme::Shuffle, 3, 2, default_randomizer(), 5).unwrap();
    let bundles: Vec<_> = (0..3).map(|i| fx.genrand(i, 1).unwrap()).collect();
    let mut sizes = Vec::new();
    for j in 1..=2 {
        for (i, b) in bundles.iter().enumerate() {
            let input = fx.sign_in_window(i, j, 3).unwrap();
            let out = randomize(&fx.pp, fx.server.ek(), j, b, &input).unwrap();
            assert!(out.tau.to_raw().is_empty());
            let (phi, _) = instance(&fx.pp, j, b, &input, out.x_tilde).unwrap();
            let Statement::Shuffle(s) = phi else { panic!() };
            assert_eq!(s.pk_s, fx.server.pk_s());
            sizes.push(out.encode().len());
        }
    }
    assert!(sizes.windows(2).all(|w| w[0] == w[1]), "{sizes:?}");
}

#[test]
fn genrand_payload_sizes() {
    for (scheme, req_len) in [(Scheme::Base, 65), (Scheme::Expand, 64), (Scheme::Shuffle, 64)] {
        let mut fx = Fixture::new(scheme, 1, 5, default_randomizer(), 6).unwrap();
        let pk = fx.clients[0].public();
        let j = (scheme == Scheme::Base).then_some(1);
        let (_, req) = genrand_request(&fx.pp, pk, j, &mut fx.rng).unwrap();
        assert_eq!(req.payload_len(&fx.pp), req_len, "{scheme}");
        assert_eq!(req.encode(&fx.pp).len(), req_len + 3);
        let resp = fx.server.handle_genrand(&req, &mut fx.rng).unwrap();
        assert_eq!(resp.to_bytes().len(), 96 + 3);
        assert_eq!(GenRandResponse::from_bytes(&resp.to_bytes()).unwrap(), resp);
    }
}

#[test]
fn bundle_and_params_round_trip() {
    for scheme in SCHEMES {
        let mut fx = Fixture::new(scheme, 1, 5, default_randomizer(), 7).unwrap();
        let b = fx.genrand(0, 2).unwrap();
        assert_eq!(RandomnessBundle::from_bytes(&b.to_bytes()).unwrap(), b);
        assert_eq!(PublicParams::from_bytes(&fx.pp.to_bytes()).unwrap(), fx.pp);
    }
}

#[test]
fn concurrent_genrand_admits_exactly_one() {
    for scheme in [Scheme::Expand, Scheme::Shuffle] {
        let fx = Arc::new(Fixture::new(scheme, 1, 3, default_randomizer(), 8).unwrap());
        let pk = fx.clients[0].public();
        let ok: usize = (0..16u64)
            .map(|t| {
                let fx = Arc::clone(&fx);
                std::thread::spawn(move || {
                    let mut rng = ChaCha20Rng::seed_from_u64(t);
                    genrand_for(&fx.pp, &fx.server, pk, 1, &mut rng).is_ok() as usize
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| h.join().unwrap())
            .sum();
        assert_eq!(ok, 1, "{scheme}");
    }
}

#[test]
fn abort_branch_table_is_unique() {
    let set: std::collections::HashSet<_> = ABORT_BRANCHES.iter().collect();
    assert_eq!(set.len(), ABORT_BRANCHES.len());
    // Shuffle verification has no tau to check, so no key or signature branch.
    assert!(!ABORT_BRANCHES
        .iter()
        .any(|(s, p, r)| *s == Scheme::Shuffle
            && *p == vldp::protocol::Phase::ServerVerify
            && matches!(r, Rejection::UnknownPk | Rejection::BadServerSig)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verify_never_panics_on_garbage(scheme_id in 1u8..=3, j in 0u32..8, bytes in proptest::collection::vec(any::<u8>(), 0..600)) {
        let scheme = Scheme::from_id(scheme_id).unwrap();
        let fx = Fixture::new(scheme, 1, 3, default_randomizer(), 9).unwrap();
        prop_assert!(fx.server.verify_bytes(j, &bytes).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let _ = fx.server.handle_genrand_bytes(&bytes, &mut rng);
    }

    #[test]
    fn mutated_honest_submission_never_accepted_with_other_output(scheme_id in 1u8..=3, pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let scheme = Scheme::from_id(scheme_id).unwrap();
        let mut fx = Fixture::new(scheme, 1, 3, default_randomizer(), 10).unwrap();
        let b = fx.genrand(0, 2).unwrap();
        let input = fx.sign_in_window(0, 2, 3).unwrap();
        let out = randomize(&fx.pp, fx.server.ek(), 2, &b, &input).unwrap();
        let mut bytes = out.encode();
        let i = pos.index(bytes.len());
        bytes[i] ^= 1 << bit;
        // A flipped bit either breaks the submission or leaves x_tilde intact.
        if let Ok(v) = fx.server.verify_bytes(2, &bytes) {
            prop_assert_eq!(v, out.x_tilde);
        }
    }
}
