//! Independent re-implementation of the three proof relations, shared by the
//! oracle tests and the acceptance target.

#![allow(dead_code)]

use blake2::{Blake2s256, Digest};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vldp::harness::{default_randomizer, Fixture};
use vldp::ldp::{LdpValue, RandomTape, Randomizer, RandomizerConfig};
use vldp::primitives::{sig_verify, PrfKey};
use vldp::protocol::{instance, randomize, Scheme};
use vldp::relations::{check, DirectCheck, ProofError, ProofSystem, RelationParams, Statement, Witness};

fn o_hash(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Blake2s256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn o_commit(value: &[u8], r: &[u8; 32]) -> [u8; 32] {
    o_hash(&[b"vldp/commit/hash/v1", &(value.len() as u32).to_be_bytes(), value, r])
}

fn o_stream(key: &[u8; 32], input: &[u8], len: usize) -> Vec<u8> {
    if len <= 32 {
        return o_hash(&[key, input])[..len].to_vec();
    }
    let mut out = Vec::new();
    for c in 0u32.. {
        if out.len() >= len {
            break;
        }
        out.extend_from_slice(&o_hash(&[key, input, &c.to_be_bytes()]));
    }
    out.truncate(len);
    out
}

fn o_merkle(root: &[u8; 32], leaf: &[u8; 32], index: u32, siblings: &[[u8; 32]]) -> bool {
    if (index as u64) >> siblings.len() != 0 {
        return false;
    }
    let mut acc = o_hash(&[&[0], leaf]);
    for (level, s) in siblings.iter().enumerate() {
        acc = if (index >> level) & 1 == 0 {
            o_hash(&[&[1], &acc, s])
        } else {
            o_hash(&[&[1], s, &acc])
        };
    }
    acc == *root
}

fn o_apply(cfg: &RandomizerConfig, x: u64, tape: Vec<u8>, x_tilde: LdpValue) -> bool {
    cfg.apply(x, &mut RandomTape::new(tape)).map_or(false, |v| v == x_tilde)
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn msg(x: u64, t: u64) -> Vec<u8> {
    [x.to_be_bytes(), t.to_be_bytes()].concat()
}

pub fn oracle(phi: &Statement, w: &Witness, params: &RelationParams) -> bool {
    let cfg = &params.randomizer;
    let len = params.tape_len();
    match (phi, w) {
        (Statement::Base(s), Witness::Base(w)) => {
            s.t_prev < w.t_x
                && w.t_x <= s.t_j
                && sig_verify(&s.pk, &w.sigma_x, &msg(w.x, w.t_x))
                && o_commit(&w.rho_c.0, &w.r_rho_c.0) == s.cm_rho_c.0
                && len <= 32
                && o_apply(cfg, w.x, xor(&w.rho_c.0[..len], &s.rho_s.0[..len]), s.x_tilde)
        }
        (Statement::Expand(s), Witness::Expand(w)) => {
            s.j >= 1
                && w.leaf_index + 1 == s.j
                && s.t_prev < w.t_x
                && w.t_x <= s.t_j
                && sig_verify(&s.pk, &w.sigma_x, &msg(w.x, w.t_x))
                && o_commit(&w.rho_c.0, &w.r_rho_c.0) == w.cm_rho_c.0
                && o_merkle(&s.root.0, &w.cm_rho_c.0, w.leaf_index, &w.path.siblings)
                && len <= 32
                && o_apply(cfg, w.x, xor(&w.rho_c.0[..len], &s.rho_s.0[..len]), s.x_tilde)
        }
        (Statement::Shuffle(s), Witness::Shuffle(w)) => {
            let k: Vec<u8> = xor(&w.k_c.0, &w.k_s.0);
            let k: [u8; 32] = k.try_into().unwrap();
            s.t_prev < w.t_x
                && w.t_x <= s.t_j
                && sig_verify(&w.pk, &w.sigma_x, &msg(w.x, w.t_x))
                && o_commit(&w.k_c.0, &w.r_kc.0) == w.cm_kc.0
                && sig_verify(&s.pk_s, &w.sigma_s, &[&w.pk.0[..], &w.cm_kc.0, &w.k_s.0].concat())
                && o_apply(cfg, w.x, o_stream(&k, &s.seed.0, len), s.x_tilde)
        }
        _ => false,
    }
}

pub struct Instance {
    pub phi: Statement,
    pub w: Witness,
}

pub const PER_RELATION: usize = 1000;
pub const CLIENTS: usize = 50;
pub const INTERVALS: u32 = 20;

pub fn honest_instances(scheme: Scheme, seed: u64) -> (Fixture, Vec<Instance>) {
    let mut fx = Fixture::new(scheme, CLIENTS, INTERVALS, default_randomizer(), seed).unwrap();
    let mut out = Vec::with_capacity(PER_RELATION);
    let k = fx.pp.randomizer().k;
    for i in 0..CLIENTS {
        let mut bundle = None;
        for j in 1..=INTERVALS {
            if bundle.is_none() || scheme == Scheme::Base {
                bundle = Some(fx.genrand(i, j).unwrap());
            }
            let x = fx.rng.gen_range(1..=k);
            let input = fx.sign_in_window(i, j, x).unwrap();
            let b = bundle.as_ref().unwrap();
            let o = randomize(&fx.pp, fx.server.ek(), j, b, &input).unwrap();
            let (phi, w) = instance(&fx.pp, j, b, &input, o.x_tilde).unwrap();
            out.push(Instance { phi, w });
        }
    }
    (fx, out)
}

fn flip_bit<T>(bytes: Vec<u8>, rng: &mut ChaCha20Rng, decode: impl Fn(&[u8]) -> Option<T>) -> T {
    loop {
        let mut b = bytes.clone();
        let i = rng.gen_range(3..b.len());
        b[i] ^= 1 << rng.gen_range(0..8);
        if let Some(v) = decode(&b) {
            return v;
        }
    }
}

pub fn mutate(inst: &Instance, donor: &Instance, k: u64, rng: &mut ChaCha20Rng) -> Instance {
    let (mut phi, mut w) = (inst.phi.clone(), inst.w.clone());
    let rel = phi.relation();
    match rng.gen_range(0..5) {
        0 => {
            phi = flip_bit(phi.to_bytes(), rng, |b| {
                Statement::from_bytes(b).ok().filter(|p| p.relation() == rel)
            })
        }
        1 => {
            w = flip_bit(w.to_bytes(), rng, |b| {
                Witness::from_bytes(b).ok().filter(|v| v.relation() == rel)
            })
        }
        2 => {
            let shift = rng.gen_range(1..k);
            let set = |v: &mut LdpValue| v.0 = (v.0 - 1 + shift) % k + 1;
            match &mut phi {
                Statement::Base(s) => set(&mut s.x_tilde),
                Statement::Expand(s) => set(&mut s.x_tilde),
                Statement::Shuffle(s) => set(&mut s.x_tilde),
            }
        }
        3 => w = donor.w.clone(),
        _ => {
            let mut key = [0u8; 32];
            rng.fill_bytes(&mut key);
            match &mut w {
                Witness::Base(w) => w.rho_c.0 = key,
                Witness::Expand(w) => w.rho_c.0 = key,
                Witness::Shuffle(w) => w.k_c = PrfKey(key),
            }
        }
    }
    Instance { phi, w }
}

/// Outcome of comparing the oracle, `check` and DirectCheck on
/// `PER_RELATION` instances, about half of them manipulated.
pub struct Agreement {
    pub trues: usize,
    pub falses: usize,
    pub disagreements: Vec<String>,
}

pub fn agreement(scheme: Scheme, seed: u64, mutation_seed: u64) -> Agreement {
    let (fx, honest) = honest_instances(scheme, seed);
    let params = fx.pp.relation;
    let k = params.randomizer.k;
    let ek = fx.server.ek();
    let vk = fx.server.vk();
    let mut rng = ChaCha20Rng::seed_from_u64(mutation_seed);
    let mut out = Agreement {
        trues: 0,
        falses: 0,
        disagreements: Vec::new(),
    };
    for (i, inst) in honest.iter().enumerate() {
        let case = if rng.gen_bool(0.5) {
            Instance {
                phi: inst.phi.clone(),
                w: inst.w.clone(),
            }
        } else {
            mutate(inst, &honest[(i + 1) % honest.len()], k, &mut rng)
        };
        let expected = oracle(&case.phi, &case.w, &params);
        let checked = check(&case.phi, &case.w, &params);
        let proof = DirectCheck.prove_unchecked(ek, &case.phi, &case.w).expect("unchecked prover");
        let verified = DirectCheck.verify(vk, &case.phi, &proof);
        let proved = match DirectCheck.prove(ek, &case.phi, &case.w) {
            Ok(p) => expected && DirectCheck.verify(vk, &case.phi, &p),
            Err(e) => !expected && matches!(e, ProofError::FalseInstance(_)),
        };
        if checked != expected || verified != expected || !proved {
            out.disagreements.push(format!(
                "{scheme} instance {i}: oracle {expected}, check {checked}, verify {verified}, prove ok {proved}"
            ));
        }
        if expected {
            out.trues += 1;
        } else {
            out.falses += 1;
        }
    }
    out
}
