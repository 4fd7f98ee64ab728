//! Manipulation attacks, each a deterministic mutation of an honest transcript.

use rand::RngCore;

use super::{default_randomizer, Fixture, HarnessError};
use crate::ldp::{LdpValue, RandomTape, Randomizer};
use crate::primitives::{PrfKey, PrfOutput};
use crate::protocol::{
    derive_tape, genrand_request, instance, public_values, randomize, Phase, ProtocolError, PublicValues,
    RandomnessBundle, RandomizeOutput, Rejection, Scheme, SignedInput,
};
use crate::relations::{sigma_s_preimage_base, sigma_s_preimage_expand, DirectCheck, Witness};

const ALL: &[Scheme] = &[Scheme::Base, Scheme::Expand, Scheme::Shuffle];
const LINKED: &[Scheme] = &[Scheme::Base, Scheme::Expand];

/// Interval under attack; the fixture has three.
const J: u32 = 2;
const INTERVALS: u32 = 3;
const HONEST: usize = 0;
const ATTACKER: usize = 1;
const PARTNER: usize = 2;
const X: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    UnregisteredClient,
    GenRandOffGrid,
    GenRandReplay,
    TamperedGenRandResponse,
    TruncatedSubmit,
    OutOfDomainOutput,
    IntervalOutOfRange,
    UnregisteredPkInTau,
    ForgedSigmaS,
    UnsignedInput,
    WrongSigner,
    StaleTimestamp,
    FutureTimestamp,
    FlippedOutput,
    BiasedTape,
    ExpandWrongLeaf,
    ShuffleRandomnessSwap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub name: &'static str,
    pub targets: &'static [Scheme],
    pub mutation: &'static str,
    pub phase: Phase,
    pub expected: Rejection,
}

impl AttackSpec {
    pub fn targets(&self, scheme: Scheme) -> bool {
        self.targets.contains(&scheme)
    }
}

macro_rules! spec {
    ($kind:ident, $name:literal, $targets:expr, $phase:ident, $expected:ident, $mutation:literal) => {
        AttackSpec {
            kind: AttackKind::$kind,
            name: $name,
            targets: $targets,
            mutation: $mutation,
            phase: Phase::$phase,
            expected: Rejection::$expected,
        }
    };
}

pub fn attack_catalog() -> Vec<AttackSpec> {
    vec![
        spec!(UnregisteredClient, "unregistered-client", ALL, ServerGenRand, UnknownPk,
            "a device outside the allow-list requests randomness"),
        spec!(GenRandOffGrid, "genrand-off-grid", &[Scheme::Base], ServerGenRand, BadWindow,
            "request carries a t_j that is not an interval end"),
        spec!(GenRandReplay, "genrand-replay", ALL, ServerGenRand, Replay,
            "client repeats GenRand to draw fresh server randomness"),
        spec!(TamperedGenRandResponse, "tampered-genrand-response", ALL, ClientGenRand, BadServerSig,
            "k_s is altered in transit to the client"),
        spec!(TruncatedSubmit, "truncated-submit", ALL, ServerVerify, Malformed,
            "last byte of the submission is dropped"),
        spec!(OutOfDomainOutput, "out-of-domain-output", ALL, ServerVerify, Malformed,
            "x_tilde is set outside the output domain"),
        spec!(IntervalOutOfRange, "interval-out-of-range", ALL, ServerVerify, BadWindow,
            "submission is filed under interval T+1"),
        spec!(UnregisteredPkInTau, "unregistered-pk-in-tau", LINKED, ServerVerify, UnknownPk,
            "tau names a device outside the allow-list"),
        spec!(ForgedSigmaS, "forged-sigma_s", LINKED, ServerVerify, BadServerSig,
            "client picks its own k_s and signs it with its own key"),
        spec!(UnsignedInput, "unsigned-input", ALL, ServerVerify, BadProof,
            "x is replaced by x' after the trusted environment signed x"),
        spec!(WrongSigner, "wrong-signer", ALL, ServerVerify, BadProof,
            "input is signed by another device's key"),
        spec!(StaleTimestamp, "stale-timestamp", ALL, ServerVerify, BadProof,
            "signed input with t_x = t_{j-1}"),
        spec!(FutureTimestamp, "future-timestamp", ALL, ServerVerify, BadProof,
            "signed input with t_x = t_j + 1"),
        spec!(FlippedOutput, "flipped-output", ALL, ServerVerify, BadProof,
            "x_tilde is overwritten after proving"),
        spec!(BiasedTape, "biased-tape", ALL, ServerVerify, BadProof,
            "client randomness differs from the committed value"),
        spec!(ExpandWrongLeaf, "expand-wrong-leaf", &[Scheme::Expand], ServerVerify, BadProof,
            "interval j is randomized with the leaf of interval j+1"),
        spec!(ShuffleRandomnessSwap, "shuffle-randomness-swap", &[Scheme::Shuffle], ServerVerify, BadProof,
            "client proves with another client's GenRand output"),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackOutcome {
    pub attack: String,
    pub scheme: Scheme,
    pub phase: Phase,
    pub expected: Rejection,
    /// `None` when the manipulated transcript was accepted.
    pub observed: Option<Rejection>,
    /// The unmodified transcript in the same fixture was accepted.
    pub honest_accepted: bool,
}

impl AttackOutcome {
    pub fn passed(&self) -> bool {
        self.honest_accepted && self.observed == Some(self.expected)
    }
}

fn rejection(e: ProtocolError) -> Result<Rejection, HarnessError> {
    match e {
        ProtocolError::Rejected(r) => Ok(r),
        other => Err(other.into()),
    }
}

/// Evaluates `attack` against `scheme` in a fresh fixture seeded by `seed`.
pub fn run_attack(spec: &AttackSpec, scheme: Scheme, seed: u64) -> Result<AttackOutcome, HarnessError> {
    if !spec.targets(scheme) {
        return Err(HarnessError::NotTargeted {
            attack: spec.name,
            scheme,
        });
    }
    let mut fx = Fixture::new(scheme, 3, INTERVALS, default_randomizer(), seed)?;

    let honest_bundle = fx.genrand(HONEST, J)?;
    let honest_input = fx.sign_in_window(HONEST, J, X)?;
    let honest_out = randomize(&fx.pp, fx.server.ek(), J, &honest_bundle, &honest_input)?;
    let honest_accepted = fx.server.verify(J, &honest_out).is_ok();

    let observed = attack(spec.kind, &mut fx)?;
    Ok(AttackOutcome {
        attack: spec.name.to_string(),
        scheme,
        phase: spec.phase,
        expected: spec.expected,
        observed,
        honest_accepted,
    })
}

fn verdict(r: Result<LdpValue, Rejection>) -> Option<Rejection> {
    r.err()
}

/// Proof for an arbitrary (possibly false) instance, as a cheating prover would build it.
fn forge(
    fx: &Fixture,
    bundle: &RandomnessBundle,
    input: &SignedInput,
    tape: Vec<u8>,
    x: u64,
) -> Result<(RandomizeOutput, Witness), HarnessError> {
    let x_tilde = fx.pp.randomizer().apply(x, &mut RandomTape::new(tape))?;
    let (phi, w) = instance(&fx.pp, J, bundle, input, x_tilde)?;
    let proof = DirectCheck.prove_unchecked(fx.server.ek(), &phi, &w)?;
    Ok((
        RandomizeOutput {
            x_tilde,
            proof,
            tau: public_values(bundle),
        },
        w,
    ))
}

fn fresh_key(fx: &mut Fixture) -> [u8; 32] {
    let mut k = [0u8; 32];
    fx.rng.fill_bytes(&mut k);
    k
}

fn attack(kind: AttackKind, fx: &mut Fixture) -> Result<Option<Rejection>, HarnessError> {
    let pp = fx.pp.clone();
    let scheme = pp.scheme;
    let k = pp.randomizer().k;
    Ok(match kind {
        AttackKind::UnregisteredClient => {
            let j = (scheme == Scheme::Base).then_some(J);
            let (_, req) = genrand_request(&pp, fx.outsider.public(), j, &mut fx.rng)?;
            fx.server.handle_genrand(&req, &mut fx.rng).err()
        }
        AttackKind::GenRandOffGrid => {
            let (_, mut req) = genrand_request(&pp, fx.clients[ATTACKER].public(), Some(J), &mut fx.rng)?;
            req.t_j = req.t_j.map(|t| t + 3);
            fx.server.handle_genrand_bytes(&req.encode(&pp), &mut fx.rng).err()
        }
        AttackKind::GenRandReplay => {
            fx.genrand(ATTACKER, J)?;
            match fx.genrand(ATTACKER, J) {
                Ok(_) => None,
                Err(e) => Some(rejection(e)?),
            }
        }
        AttackKind::TamperedGenRandResponse => {
            let j = (scheme == Scheme::Base).then_some(J);
            let (pending, req) = genrand_request(&pp, fx.clients[ATTACKER].public(), j, &mut fx.rng)?;
            let mut resp = fx.server.handle_genrand(&req, &mut fx.rng).map_err(ProtocolError::Rejected)?;
            resp.k_s.0[0] ^= 1;
            match pending.finish(&fx.server.pk_s(), &resp) {
                Ok(_) => None,
                Err(e) => Some(rejection(e)?),
            }
        }
        AttackKind::TruncatedSubmit | AttackKind::OutOfDomainOutput | AttackKind::IntervalOutOfRange
        | AttackKind::FlippedOutput | AttackKind::UnregisteredPkInTau => {
            let bundle = fx.genrand(ATTACKER, J)?;
            let input = fx.sign_in_window(ATTACKER, J, X)?;
            let mut out = randomize(&pp, fx.server.ek(), J, &bundle, &input)?;
            match kind {
                AttackKind::TruncatedSubmit => {
                    let mut bytes = out.encode();
                    bytes.pop();
                    verdict(fx.server.verify_bytes(J, &bytes))
                }
                AttackKind::OutOfDomainOutput => {
                    out.x_tilde = LdpValue(k + 1);
                    verdict(fx.server.verify(J, &out))
                }
                AttackKind::IntervalOutOfRange => verdict(fx.server.verify(INTERVALS + 1, &out)),
                AttackKind::FlippedOutput => {
                    out.x_tilde = LdpValue(out.x_tilde.0 % k + 1);
                    verdict(fx.server.verify(J, &out))
                }
                _ => {
                    let outsider = fx.outsider.public();
                    match &mut out.tau {
                        PublicValues::Base { pk, .. } | PublicValues::Expand { pk, .. } => *pk = outsider,
                        PublicValues::Empty => unreachable!("not a Shuffle attack"),
                    }
                    verdict(fx.server.verify(J, &out))
                }
            }
        }
        AttackKind::ForgedSigmaS => {
            let mut bundle = fx.genrand(ATTACKER, J)?;
            let input = fx.sign_in_window(ATTACKER, J, X)?;
            let own_k_s = PrfKey(fresh_key(fx));
            let forger = crate::primitives::SigningKeyPair::generate(&mut fx.rng);
            match &mut bundle {
                RandomnessBundle::Base { pk, cm, t_j, k_s, sigma_s, .. } => {
                    *k_s = own_k_s;
                    *sigma_s = forger.sign(&sigma_s_preimage_base(pk, cm, k_s, *t_j));
                }
                RandomnessBundle::Expand { pk, tree, k_s, sigma_s, .. } => {
                    *k_s = own_k_s;
                    *sigma_s = forger.sign(&sigma_s_preimage_expand(pk, &tree.root(), k_s));
                }
                RandomnessBundle::Shuffle { .. } => unreachable!("not a Shuffle attack"),
            }
            let tape = derive_tape(&pp, J, &bundle)?;
            let (out, _) = forge(fx, &bundle, &input, tape, X)?;
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::UnsignedInput => {
            let bundle = fx.genrand(ATTACKER, J)?;
            let mut input = fx.sign_in_window(ATTACKER, J, X)?;
            input.x = X % k + 1;
            let tape = derive_tape(&pp, J, &bundle)?;
            let (out, _) = forge(fx, &bundle, &input, tape, input.x)?;
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::WrongSigner => {
            let bundle = fx.genrand(ATTACKER, J)?;
            let (t_prev, _) = pp.grid.window(J)?;
            let input = fx.outsider.sign(X, t_prev + 1)?;
            let tape = derive_tape(&pp, J, &bundle)?;
            let (out, _) = forge(fx, &bundle, &input, tape, X)?;
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::StaleTimestamp | AttackKind::FutureTimestamp => {
            let bundle = fx.genrand(ATTACKER, J)?;
            let (t_prev, t_j) = pp.grid.window(J)?;
            let t_x = if kind == AttackKind::StaleTimestamp { t_prev } else { t_j + 1 };
            let input = fx.clients[ATTACKER].sign(X, t_x)?;
            let tape = derive_tape(&pp, J, &bundle)?;
            let (out, _) = forge(fx, &bundle, &input, tape, X)?;
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::BiasedTape => {
            let mut bundle = fx.genrand(ATTACKER, J)?;
            let input = fx.sign_in_window(ATTACKER, J, X)?;
            let chosen = fresh_key(fx);
            match &mut bundle {
                RandomnessBundle::Base { rho_c, .. } => *rho_c = PrfOutput(chosen),
                RandomnessBundle::Expand { rho_c, .. } => rho_c[J as usize - 1] = PrfOutput(chosen),
                RandomnessBundle::Shuffle { k_c, .. } => *k_c = PrfKey(chosen),
            }
            let tape = derive_tape(&pp, J, &bundle)?;
            let (out, _) = forge(fx, &bundle, &input, tape, X)?;
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::ExpandWrongLeaf => {
            let bundle = fx.genrand(ATTACKER, J)?;
            let input = fx.sign_in_window(ATTACKER, J, X)?;
            let RandomnessBundle::Expand { rho_c, r, cm, tree, k_s, .. } = &bundle else {
                unreachable!("Expand-only attack")
            };
            let leaf = J as usize;
            let rho_s = crate::primitives::prf_eval(k_s, &pp.seed(J)?.0);
            let tape = crate::relations::xor_tape(&rho_c[leaf], &rho_s, pp.tape_len()).expect("tape fits");
            let x_tilde = pp.randomizer().apply(X, &mut RandomTape::new(tape))?;
            let (phi, w) = instance(&pp, J, &bundle, &input, x_tilde)?;
            let Witness::Expand(mut w) = w else { unreachable!() };
            w.rho_c = rho_c[leaf];
            w.r_rho_c = r[leaf];
            w.cm_rho_c = cm[leaf];
            w.path = tree.path(leaf).map_err(ProtocolError::from)?;
            w.leaf_index = leaf as u32;
            let proof = DirectCheck.prove_unchecked(fx.server.ek(), &phi, &Witness::Expand(w))?;
            let out = RandomizeOutput {
                x_tilde,
                proof,
                tau: public_values(&bundle),
            };
            verdict(fx.server.verify(J, &out))
        }
        AttackKind::ShuffleRandomnessSwap => {
            fx.genrand(ATTACKER, J)?;
            let mut partner = fx.genrand(PARTNER, J)?;
            let input = fx.sign_in_window(ATTACKER, J, X)?;
            let attacker_pk = fx.clients[ATTACKER].public();
            if let RandomnessBundle::Shuffle { pk, .. } = &mut partner {
                *pk = attacker_pk;
            }
            let tape = derive_tape(&pp, J, &partner)?;
            let (out, _) = forge(fx, &partner, &input, tape, X)?;
            verdict(fx.server.verify(J, &out))
        }
    })
}
