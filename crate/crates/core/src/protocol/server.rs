//! Server side: key generation, GenRand responses and verification.

use std::collections::HashSet;
use std::sync::Mutex;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use super::client::base_server_randomness;
use super::messages::{GenRandRequest, GenRandResponse, PublicValues, RandomizeOutput};
use super::{ProtocolError, PublicParams, Scheme};
use crate::ldp::{LdpValue, Randomizer};
use crate::primitives::{prf_eval, sig_verify, PrfKey, PublicKey, SigningKeyPair};
use crate::relations::{
    backend, sigma_s_preimage_base, sigma_s_preimage_expand, sigma_s_preimage_shuffle, EvaluationKey, ProofSystem,
    Statement, StatementBase, StatementExpand, StatementShuffle, VerificationKey,
};

/// Why the server (or, for `BadServerSig`, the client) aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Error)]
pub enum Rejection {
    #[error("unknown-pk")]
    UnknownPk,
    #[error("replay")]
    Replay,
    #[error("bad-server-sig")]
    BadServerSig,
    #[error("bad-proof")]
    BadProof,
    #[error("bad-window")]
    BadWindow,
    #[error("malformed")]
    Malformed,
}

impl Rejection {
    pub const ALL: [Rejection; 6] = [
        Rejection::UnknownPk,
        Rejection::Replay,
        Rejection::BadServerSig,
        Rejection::BadProof,
        Rejection::BadWindow,
        Rejection::Malformed,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Rejection::UnknownPk => "unknown-pk",
            Rejection::Replay => "replay",
            Rejection::BadServerSig => "bad-server-sig",
            Rejection::BadProof => "bad-proof",
            Rejection::BadWindow => "bad-window",
            Rejection::Malformed => "malformed",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.code() == code)
    }
}

/// Server keys, proof keys, client allow-list and the consumed list `L`.
pub struct ServerState {
    pp: PublicParams,
    keys: SigningKeyPair,
    ek: EvaluationKey,
    vk: VerificationKey,
    system: Box<dyn ProofSystem>,
    registry: HashSet<PublicKey>,
    /// `(pk_i, j)` in Base, `(pk_i, 0)` otherwise.
    consumed: Mutex<HashSet<(PublicKey, u32)>>,
}

impl std::fmt::Debug for ServerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerState")
            .field("scheme", &self.pp.scheme)
            .field("pk_s", &self.keys.public())
            .field("registered", &self.registry.len())
            .field("consumed", &self.consumed_len())
            .finish_non_exhaustive()
    }
}

/// Fresh server signing key, fresh proof keys and an empty `L`.
pub fn keygen<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    registry: impl IntoIterator<Item = PublicKey>,
    rng: &mut R,
) -> Result<ServerState, ProtocolError> {
    let keys = SigningKeyPair::generate(rng);
    let system = backend(pp.backend);
    let (ek, vk, _trap) = system.setup(pp.scheme, &pp.relation, rng)?;
    Ok(ServerState {
        pp: pp.clone(),
        keys,
        ek,
        vk,
        system,
        registry: registry.into_iter().collect(),
        consumed: Mutex::new(HashSet::new()),
    })
}

impl ServerState {
    pub fn params(&self) -> &PublicParams {
        &self.pp
    }

    pub fn pk_s(&self) -> PublicKey {
        self.keys.public()
    }

    pub fn signing_seed(&self) -> &[u8; 32] {
        self.keys.seed()
    }

    pub fn ek(&self) -> &EvaluationKey {
        &self.ek
    }

    pub fn vk(&self) -> &VerificationKey {
        &self.vk
    }

    pub fn is_registered(&self, pk: &PublicKey) -> bool {
        self.registry.contains(pk)
    }

    pub fn consumed_len(&self) -> usize {
        self.consumed.lock().map(|l| l.len()).unwrap_or(0)
    }

    pub fn registry(&self) -> impl Iterator<Item = &PublicKey> {
        self.registry.iter()
    }

    /// Snapshot of `L`, sorted.
    pub fn consumed_entries(&self) -> Vec<(PublicKey, u32)> {
        let mut v: Vec<_> = self
            .consumed
            .lock()
            .map(|l| l.iter().copied().collect())
            .unwrap_or_default();
        v.sort();
        v
    }

    /// Adds previously consumed entries back into `L`.
    pub fn restore_consumed(&self, entries: impl IntoIterator<Item = (PublicKey, u32)>) {
        if let Ok(mut l) = self.consumed.lock() {
            l.extend(entries);
        }
    }

    /// Rebuilds a server from stored parts, with an empty `L`.
    pub fn from_parts(
        pp: PublicParams,
        signing_seed: [u8; 32],
        ek: EvaluationKey,
        vk: VerificationKey,
        registry: impl IntoIterator<Item = PublicKey>,
    ) -> Self {
        Self {
            system: backend(pp.backend),
            pp,
            keys: SigningKeyPair::from_seed(signing_seed),
            ek,
            vk,
            registry: registry.into_iter().collect(),
            consumed: Mutex::new(HashSet::new()),
        }
    }

    /// Second GenRand message. The membership check and insertion into `L`
    /// happen under one lock.
    pub fn handle_genrand<R: RngCore + CryptoRng>(
        &self,
        req: &GenRandRequest,
        rng: &mut R,
    ) -> Result<GenRandResponse, Rejection> {
        if !self.registry.contains(&req.pk) {
            return Err(Rejection::UnknownPk);
        }
        let j = match (self.pp.scheme, req.t_j) {
            (Scheme::Base, Some(t)) => self.pp.grid.index_of(t).ok_or(Rejection::BadWindow)?,
            (Scheme::Base, None) => return Err(Rejection::Malformed),
            (_, Some(_)) => return Err(Rejection::Malformed),
            (_, None) => 0,
        };
        {
            let mut l = self.consumed.lock().map_err(|_| Rejection::Malformed)?;
            if !l.insert((req.pk, j)) {
                return Err(Rejection::Replay);
            }
        }
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        let k_s = PrfKey(k);
        let preimage = match self.pp.scheme {
            Scheme::Base => sigma_s_preimage_base(&req.pk, &req.commitment(), &k_s, req.t_j.unwrap_or_default()),
            Scheme::Expand => sigma_s_preimage_expand(&req.pk, &req.root(), &k_s),
            Scheme::Shuffle => sigma_s_preimage_shuffle(&req.pk, &req.commitment(), &k_s),
        };
        Ok(GenRandResponse {
            k_s,
            sigma_s: self.keys.sign(&preimage),
        })
    }

    pub fn handle_genrand_bytes<R: RngCore + CryptoRng>(
        &self,
        bytes: &[u8],
        rng: &mut R,
    ) -> Result<GenRandResponse, Rejection> {
        let req = GenRandRequest::decode(bytes, &self.pp).map_err(|_| Rejection::Malformed)?;
        self.handle_genrand(&req, rng)
    }

    /// Checks a submission for interval `j` and returns `x_tilde` on success.
    pub fn verify(&self, j: u32, out: &RandomizeOutput) -> Result<LdpValue, Rejection> {
        let (t_prev, t_j) = self.pp.grid.window(j).map_err(|_| Rejection::BadWindow)?;
        if !self.pp.randomizer().output_domain().contains(&out.x_tilde.0) {
            return Err(Rejection::Malformed);
        }
        let phi = match (self.pp.scheme, &out.tau) {
            (Scheme::Base, PublicValues::Base { pk, cm, k_s, sigma_s }) => {
                if !self.registry.contains(pk) {
                    return Err(Rejection::UnknownPk);
                }
                if !sig_verify(&self.pk_s(), sigma_s, &sigma_s_preimage_base(pk, cm, k_s, t_j)) {
                    return Err(Rejection::BadServerSig);
                }
                Statement::Base(StatementBase {
                    t_prev,
                    t_j,
                    pk: *pk,
                    cm_rho_c: *cm,
                    rho_s: base_server_randomness(k_s),
                    x_tilde: out.x_tilde,
                })
            }
            (Scheme::Expand, PublicValues::Expand { pk, root, k_s, sigma_s }) => {
                if !self.registry.contains(pk) {
                    return Err(Rejection::UnknownPk);
                }
                if !sig_verify(&self.pk_s(), sigma_s, &sigma_s_preimage_expand(pk, root, k_s)) {
                    return Err(Rejection::BadServerSig);
                }
                let seed = self.pp.seed(j).map_err(|_| Rejection::BadWindow)?;
                Statement::Expand(StatementExpand {
                    t_prev,
                    t_j,
                    j,
                    pk: *pk,
                    root: *root,
                    rho_s: prf_eval(k_s, &seed.0),
                    x_tilde: out.x_tilde,
                })
            }
            (Scheme::Shuffle, PublicValues::Empty) => Statement::Shuffle(StatementShuffle {
                t_prev,
                t_j,
                pk_s: self.pk_s(),
                seed: *self.pp.seed(j).map_err(|_| Rejection::BadWindow)?,
                x_tilde: out.x_tilde,
            }),
            _ => return Err(Rejection::Malformed),
        };
        if self.system.verify(&self.vk, &phi, &out.proof) {
            Ok(out.x_tilde)
        } else {
            Err(Rejection::BadProof)
        }
    }

    /// Like [`ServerState::verify`] on an encoded SUBMIT frame.
    pub fn verify_bytes(&self, j: u32, bytes: &[u8]) -> Result<LdpValue, Rejection> {
        let out = RandomizeOutput::decode(bytes, self.pp.scheme).map_err(|_| Rejection::Malformed)?;
        self.verify(j, &out)
    }
}
