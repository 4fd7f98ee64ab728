//! Client side: the trusted-environment emulator, GenRand and Randomize.

use rand::{CryptoRng, RngCore};

use super::messages::{GenRandRequest, GenRandResponse, PublicValues, RandomizeOutput};
use super::server::Rejection;
use super::{ProtocolError, PublicParams, Scheme};
use crate::ldp::{LdpValue, RandomTape, Randomizer, RandomizerConfig};
use crate::primitives::{
    merkle_build, prf_eval, sig_verify, Blinding, Commitment, MerkleTree, PrfKey, PrfOutput, PublicKey, Reader,
    Signature, SigningKeyPair, Tag, Wire, WireError, Writer,
};
use crate::relations::{
    backend, seeded_tape, sigma_s_preimage_base, sigma_s_preimage_expand, sigma_s_preimage_shuffle,
    signed_input_preimage, xor_tape, EvaluationKey, Statement, StatementBase, StatementExpand, StatementShuffle,
    Timestamp, Witness, WitnessBase, WitnessExpand, WitnessShuffle,
};

/// Authenticated raw input `(x, t_x, sigma_x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedInput {
    pub x: u64,
    pub t_x: Timestamp,
    pub sigma_x: Signature,
}

impl Wire for SignedInput {
    const TAG: Tag = Tag::SignedInput;

    fn write_body(&self, w: &mut Writer) {
        w.put_u64(self.x);
        w.put_u64(self.t_x);
        w.put_bytes(&self.sigma_x.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            x: r.get_u64()?,
            t_x: r.get_u64()?,
            sigma_x: Signature(r.get_array()?),
        })
    }
}

/// Emulated trusted environment. It holds `sk_i`, signs only in-domain
/// inputs, and never signs twice for the same or an earlier tick.
#[derive(Debug, Clone)]
pub struct TrustedEnvironment {
    keys: SigningKeyPair,
    randomizer: RandomizerConfig,
    last_tick: Option<Timestamp>,
}

impl TrustedEnvironment {
    pub fn new(keys: SigningKeyPair, randomizer: RandomizerConfig) -> Self {
        Self {
            keys,
            randomizer,
            last_tick: None,
        }
    }

    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R, randomizer: RandomizerConfig) -> Self {
        Self::new(SigningKeyPair::generate(rng), randomizer)
    }

    /// Restores an environment that has already signed up to `last_tick`.
    pub fn resume(keys: SigningKeyPair, randomizer: RandomizerConfig, last_tick: Option<Timestamp>) -> Self {
        Self {
            keys,
            randomizer,
            last_tick,
        }
    }

    pub fn public(&self) -> PublicKey {
        self.keys.public()
    }

    pub fn last_tick(&self) -> Option<Timestamp> {
        self.last_tick
    }

    pub fn sign(&mut self, x: u64, t_x: Timestamp) -> Result<SignedInput, ProtocolError> {
        self.randomizer.check_input(x)?;
        if let Some(last) = self.last_tick {
            if t_x <= last {
                return Err(ProtocolError::ClockRegression { t_x, last });
            }
        }
        self.last_tick = Some(t_x);
        Ok(SignedInput {
            x,
            t_x,
            sigma_x: self.keys.sign(&signed_input_preimage(x, t_x)),
        })
    }
}

/// Client output of GenRand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomnessBundle {
    Base {
        pk: PublicKey,
        pk_s: PublicKey,
        t_j: Timestamp,
        rho_c: PrfOutput,
        r: Blinding,
        cm: Commitment,
        k_s: PrfKey,
        sigma_s: Signature,
    },
    Expand {
        pk: PublicKey,
        pk_s: PublicKey,
        rho_c: Vec<PrfOutput>,
        r: Vec<Blinding>,
        cm: Vec<Commitment>,
        tree: MerkleTree,
        k_s: PrfKey,
        sigma_s: Signature,
    },
    Shuffle {
        pk: PublicKey,
        pk_s: PublicKey,
        k_c: PrfKey,
        r_kc: Blinding,
        cm_kc: Commitment,
        k_s: PrfKey,
        sigma_s: Signature,
    },
}

impl RandomnessBundle {
    pub fn scheme(&self) -> Scheme {
        match self {
            RandomnessBundle::Base { .. } => Scheme::Base,
            RandomnessBundle::Expand { .. } => Scheme::Expand,
            RandomnessBundle::Shuffle { .. } => Scheme::Shuffle,
        }
    }

    pub fn pk(&self) -> PublicKey {
        match self {
            RandomnessBundle::Base { pk, .. }
            | RandomnessBundle::Expand { pk, .. }
            | RandomnessBundle::Shuffle { pk, .. } => *pk,
        }
    }

    pub fn k_s(&self) -> PrfKey {
        match self {
            RandomnessBundle::Base { k_s, .. }
            | RandomnessBundle::Expand { k_s, .. }
            | RandomnessBundle::Shuffle { k_s, .. } => *k_s,
        }
    }
}

#[derive(Debug, Clone)]
enum PendingState {
    Base {
        t_j: Timestamp,
        rho_c: PrfOutput,
        r: Blinding,
        cm: Commitment,
    },
    Expand {
        rho_c: Vec<PrfOutput>,
        r: Vec<Blinding>,
        cm: Vec<Commitment>,
        tree: MerkleTree,
    },
    Shuffle {
        k_c: PrfKey,
        r_kc: Blinding,
        cm_kc: Commitment,
    },
}

/// Client state between the first and third GenRand messages.
#[derive(Debug, Clone)]
pub struct GenRandPending {
    pk: PublicKey,
    state: PendingState,
}

fn random_bytes<R: RngCore + CryptoRng>(rng: &mut R) -> [u8; 32] {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    b
}

/// First GenRand message. Base needs the interval `j`; the other schemes
/// request randomness for all intervals at once and take `None`.
pub fn genrand_request<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    pk: PublicKey,
    j: Option<u32>,
    rng: &mut R,
) -> Result<(GenRandPending, GenRandRequest), ProtocolError> {
    let scheme = pp.relation.commitment;
    let (state, binding, t_j) = match (pp.scheme, j) {
        (Scheme::Base, Some(j)) => {
            let (_, t_j) = pp.grid.window(j)?;
            let rho_c = PrfOutput(random_bytes(rng));
            let r = Blinding(random_bytes(rng));
            let cm = scheme.commit(&rho_c.0, &r);
            (PendingState::Base { t_j, rho_c, r, cm }, cm.0, Some(t_j))
        }
        (Scheme::Expand, None) => {
            let k_c = PrfKey(random_bytes(rng));
            let t = pp.intervals() as u64;
            let rho_c: Vec<_> = (1..=t).map(|j| prf_eval(&k_c, &j.to_be_bytes())).collect();
            let r: Vec<_> = (0..t).map(|_| Blinding(random_bytes(rng))).collect();
            let cm: Vec<_> = rho_c.iter().zip(&r).map(|(v, r)| scheme.commit(&v.0, r)).collect();
            let tree = merkle_build(&cm, pp.merkle_depth)?;
            let root = tree.root().0;
            (PendingState::Expand { rho_c, r, cm, tree }, root, None)
        }
        (Scheme::Shuffle, None) => {
            let k_c = PrfKey(random_bytes(rng));
            let r_kc = Blinding(random_bytes(rng));
            let cm_kc = scheme.commit(&k_c.0, &r_kc);
            (PendingState::Shuffle { k_c, r_kc, cm_kc }, cm_kc.0, None)
        }
        _ => return Err(ProtocolError::Mismatch),
    };
    Ok((GenRandPending { pk, state }, GenRandRequest { pk, binding, t_j }))
}

impl GenRandPending {
    /// Third step: checks `sigma_s` and assembles the bundle.
    pub fn finish(self, pk_s: &PublicKey, resp: &GenRandResponse) -> Result<RandomnessBundle, ProtocolError> {
        let GenRandResponse { k_s, sigma_s } = resp.clone();
        let pk = self.pk;
        let (preimage, bundle) = match self.state {
            PendingState::Base { t_j, rho_c, r, cm } => (
                sigma_s_preimage_base(&pk, &cm, &k_s, t_j),
                RandomnessBundle::Base {
                    pk,
                    pk_s: *pk_s,
                    t_j,
                    rho_c,
                    r,
                    cm,
                    k_s,
                    sigma_s,
                },
            ),
            PendingState::Expand { rho_c, r, cm, tree } => (
                sigma_s_preimage_expand(&pk, &tree.root(), &k_s),
                RandomnessBundle::Expand {
                    pk,
                    pk_s: *pk_s,
                    rho_c,
                    r,
                    cm,
                    tree,
                    k_s,
                    sigma_s,
                },
            ),
            PendingState::Shuffle { k_c, r_kc, cm_kc } => (
                sigma_s_preimage_shuffle(&pk, &cm_kc, &k_s),
                RandomnessBundle::Shuffle {
                    pk,
                    pk_s: *pk_s,
                    k_c,
                    r_kc,
                    cm_kc,
                    k_s,
                    sigma_s,
                },
            ),
        };
        if !sig_verify(pk_s, &sigma_s, &preimage) {
            return Err(ProtocolError::Rejected(Rejection::BadServerSig));
        }
        Ok(bundle)
    }
}

/// Base: `rho_s = prf(k_s, 0)` with the input as one zero byte.
pub fn base_server_randomness(k_s: &PrfKey) -> PrfOutput {
    prf_eval(k_s, &[0])
}

/// Random tape for interval `j` as fixed by the GenRand transcript.
pub fn derive_tape(pp: &PublicParams, j: u32, bundle: &RandomnessBundle) -> Result<Vec<u8>, ProtocolError> {
    pp.grid.check_interval(j)?;
    let len = pp.tape_len();
    match bundle {
        RandomnessBundle::Base { t_j, rho_c, k_s, .. } => {
            if pp.grid.index_of(*t_j) != Some(j) {
                return Err(ProtocolError::Mismatch);
            }
            xor_tape(rho_c, &base_server_randomness(k_s), len).ok_or(ProtocolError::Mismatch)
        }
        RandomnessBundle::Expand { rho_c, k_s, .. } => {
            let rho_s = prf_eval(k_s, &pp.seed(j)?.0);
            let own = rho_c.get(j as usize - 1).ok_or(ProtocolError::Mismatch)?;
            xor_tape(own, &rho_s, len).ok_or(ProtocolError::Mismatch)
        }
        RandomnessBundle::Shuffle { k_c, k_s, .. } => Ok(seeded_tape(&k_c.xor(k_s), pp.seed(j)?, len)),
    }
}

/// Builds the relation instance for an honest submission with output `x_tilde`.
pub fn instance(
    pp: &PublicParams,
    j: u32,
    bundle: &RandomnessBundle,
    input: &SignedInput,
    x_tilde: LdpValue,
) -> Result<(Statement, Witness), ProtocolError> {
    let (t_prev, t_j) = pp.grid.window(j)?;
    Ok(match bundle {
        RandomnessBundle::Base {
            pk, rho_c, r, cm, k_s, ..
        } => (
            Statement::Base(StatementBase {
                t_prev,
                t_j,
                pk: *pk,
                cm_rho_c: *cm,
                rho_s: base_server_randomness(k_s),
                x_tilde,
            }),
            Witness::Base(WitnessBase {
                t_x: input.t_x,
                x: input.x,
                sigma_x: input.sigma_x,
                rho_c: *rho_c,
                r_rho_c: *r,
            }),
        ),
        RandomnessBundle::Expand {
            pk,
            rho_c,
            r,
            cm,
            tree,
            k_s,
            ..
        } => {
            let leaf = j as usize - 1;
            (
                Statement::Expand(StatementExpand {
                    t_prev,
                    t_j,
                    j,
                    pk: *pk,
                    root: tree.root(),
                    rho_s: prf_eval(k_s, &pp.seed(j)?.0),
                    x_tilde,
                }),
                Witness::Expand(WitnessExpand {
                    t_x: input.t_x,
                    x: input.x,
                    sigma_x: input.sigma_x,
                    rho_c: *rho_c.get(leaf).ok_or(ProtocolError::Mismatch)?,
                    r_rho_c: *r.get(leaf).ok_or(ProtocolError::Mismatch)?,
                    cm_rho_c: *cm.get(leaf).ok_or(ProtocolError::Mismatch)?,
                    path: tree.path(leaf)?,
                    leaf_index: leaf as u32,
                }),
            )
        }
        RandomnessBundle::Shuffle {
            pk,
            pk_s,
            k_c,
            r_kc,
            cm_kc,
            k_s,
            sigma_s,
        } => (
            Statement::Shuffle(StatementShuffle {
                t_prev,
                t_j,
                pk_s: *pk_s,
                seed: *pp.seed(j)?,
                x_tilde,
            }),
            Witness::Shuffle(WitnessShuffle {
                t_x: input.t_x,
                x: input.x,
                pk: *pk,
                sigma_x: input.sigma_x,
                k_c: *k_c,
                r_kc: *r_kc,
                cm_kc: *cm_kc,
                k_s: *k_s,
                sigma_s: *sigma_s,
            }),
        ),
    })
}

/// Public values `tau` for a bundle.
pub fn public_values(bundle: &RandomnessBundle) -> PublicValues {
    match bundle {
        RandomnessBundle::Base {
            pk, cm, k_s, sigma_s, ..
        } => PublicValues::Base {
            pk: *pk,
            cm: *cm,
            k_s: *k_s,
            sigma_s: *sigma_s,
        },
        RandomnessBundle::Expand {
            pk,
            tree,
            k_s,
            sigma_s,
            ..
        } => PublicValues::Expand {
            pk: *pk,
            root: tree.root(),
            k_s: *k_s,
            sigma_s: *sigma_s,
        },
        RandomnessBundle::Shuffle { .. } => PublicValues::Empty,
    }
}

/// Randomizes a signed input for interval `j` and proves it. Refuses inputs
/// whose timestamp is outside the interval, since no valid proof exists.
pub fn randomize(
    pp: &PublicParams,
    ek: &EvaluationKey,
    j: u32,
    bundle: &RandomnessBundle,
    input: &SignedInput,
) -> Result<RandomizeOutput, ProtocolError> {
    if bundle.scheme() != pp.scheme {
        return Err(ProtocolError::Mismatch);
    }
    let (t_prev, t_j) = pp.grid.window(j)?;
    if !(t_prev < input.t_x && input.t_x <= t_j) {
        return Err(ProtocolError::OutsideWindow {
            t_x: input.t_x,
            t_prev,
            t_j,
        });
    }
    let tape = derive_tape(pp, j, bundle)?;
    let x_tilde = pp.randomizer().apply(input.x, &mut RandomTape::new(tape))?;
    let (phi, w) = instance(pp, j, bundle, input, x_tilde)?;
    let proof = backend(pp.backend).prove(ek, &phi, &w)?;
    Ok(RandomizeOutput {
        x_tilde,
        proof,
        tau: public_values(bundle),
    })
}

impl Wire for RandomnessBundle {
    const TAG: Tag = Tag::Bundle;

    fn write_body(&self, w: &mut Writer) {
        w.put_u8(self.scheme().id());
        match self {
            RandomnessBundle::Base {
                pk,
                pk_s,
                t_j,
                rho_c,
                r,
                cm,
                k_s,
                sigma_s,
            } => {
                w.put_bytes(&pk.0);
                w.put_bytes(&pk_s.0);
                w.put_u64(*t_j);
                w.put_bytes(&rho_c.0);
                w.put_bytes(&r.0);
                w.put_bytes(&cm.0);
                w.put_bytes(&k_s.0);
                w.put_bytes(&sigma_s.0);
            }
            RandomnessBundle::Expand {
                pk,
                pk_s,
                rho_c,
                r,
                cm,
                tree,
                k_s,
                sigma_s,
            } => {
                w.put_bytes(&pk.0);
                w.put_bytes(&pk_s.0);
                w.put_u8(tree.depth());
                w.put_u16(rho_c.len() as u16);
                for ((v, r), c) in rho_c.iter().zip(r).zip(cm) {
                    w.put_bytes(&v.0);
                    w.put_bytes(&r.0);
                    w.put_bytes(&c.0);
                }
                w.put_bytes(&k_s.0);
                w.put_bytes(&sigma_s.0);
            }
            RandomnessBundle::Shuffle {
                pk,
                pk_s,
                k_c,
                r_kc,
                cm_kc,
                k_s,
                sigma_s,
            } => {
                w.put_bytes(&pk.0);
                w.put_bytes(&pk_s.0);
                w.put_bytes(&k_c.0);
                w.put_bytes(&r_kc.0);
                w.put_bytes(&cm_kc.0);
                w.put_bytes(&k_s.0);
                w.put_bytes(&sigma_s.0);
            }
        }
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let scheme = Scheme::from_id(r.get_u8()?).ok_or(WireError::Invalid("scheme"))?;
        let pk = PublicKey(r.get_array()?);
        let pk_s = PublicKey(r.get_array()?);
        Ok(match scheme {
            Scheme::Base => RandomnessBundle::Base {
                pk,
                pk_s,
                t_j: r.get_u64()?,
                rho_c: PrfOutput(r.get_array()?),
                r: Blinding(r.get_array()?),
                cm: Commitment(r.get_array()?),
                k_s: PrfKey(r.get_array()?),
                sigma_s: Signature(r.get_array()?),
            },
            Scheme::Expand => {
                let depth = r.get_u8()?;
                let n = r.get_u16()? as usize;
                let (mut rho_c, mut rs, mut cm) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
                for _ in 0..n {
                    rho_c.push(PrfOutput(r.get_array()?));
                    rs.push(Blinding(r.get_array()?));
                    cm.push(Commitment(r.get_array()?));
                }
                let tree = merkle_build(&cm, depth).map_err(|_| WireError::Invalid("merkle tree"))?;
                RandomnessBundle::Expand {
                    pk,
                    pk_s,
                    rho_c,
                    r: rs,
                    cm,
                    tree,
                    k_s: PrfKey(r.get_array()?),
                    sigma_s: Signature(r.get_array()?),
                }
            }
            Scheme::Shuffle => RandomnessBundle::Shuffle {
                pk,
                pk_s,
                k_c: PrfKey(r.get_array()?),
                r_kc: Blinding(r.get_array()?),
                cm_kc: Commitment(r.get_array()?),
                k_s: PrfKey(r.get_array()?),
                sigma_s: Signature(r.get_array()?),
            },
        })
    }
}
