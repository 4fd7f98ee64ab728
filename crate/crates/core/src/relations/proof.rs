//! Proof-system interface and its backends.
//!
//! [`DirectCheck`] is a test backend: a proof carries the witness in the clear,
//! bound to a digest of the statement and to the keys from one `setup`.
//! Verification re-runs the relation check. It is sound and complete but not
//! zero-knowledge, so it cannot back the simulation-based experiments.
//!
//! [`SnarkSeam`] is where an external proving system plugs in. No circuit
//! backend ships with this crate, so every call reports it as unavailable.

use rand::RngCore;
use thiserror::Error;

use super::{check, RelationId, RelationParams, Statement, Witness};
use crate::primitives::{hash, Reader, Tag, Wire, WireError, Writer};

const DIGEST_TAG: &[u8] = b"vldp/direct-check/statement";
const BIND_TAG: &[u8] = b"vldp/direct-check/binding";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("statement does not satisfy the {0} relation")]
    FalseInstance(RelationId),
    #[error("key is for the {key} relation, instance is {instance}")]
    RelationMismatch { key: RelationId, instance: RelationId },
    #[error("simulation unsupported by the {0} backend")]
    SimulationUnsupported(BackendId),
    #[error("the {0} backend is not available in this build")]
    BackendUnavailable(BackendId),
    #[error("malformed key material: {0}")]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendId {
    DirectCheck,
    Snark,
}

impl BackendId {
    pub fn id(self) -> u8 {
        match self {
            BackendId::DirectCheck => 1,
            BackendId::Snark => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(BackendId::DirectCheck),
            2 => Some(BackendId::Snark),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendId::DirectCheck => "direct-check",
            BackendId::Snark => "snark",
        }
    }

    /// Whether proofs hide the witness.
    pub fn is_zero_knowledge(self) -> bool {
        matches!(self, BackendId::Snark)
    }
}

impl std::fmt::Display for BackendId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BackendId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "direct-check" | "direct" => Ok(BackendId::DirectCheck),
            "snark" => Ok(BackendId::Snark),
            other => Err(format!("unknown proof backend `{other}`")),
        }
    }
}

/// Key material shared by evaluation and verification keys.
#[derive(Debug, Clone, PartialEq, Eq)]
struct KeyCore {
    backend: BackendId,
    relation: RelationId,
    params: RelationParams,
    key_id: [u8; 32],
}

impl KeyCore {
    fn write(&self, w: &mut Writer) {
        w.put_u8(self.backend.id());
        w.put_u8(self.relation.id());
        w.put_object(&self.params);
        w.put_bytes(&self.key_id);
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            backend: BackendId::from_id(r.get_u8()?).ok_or(WireError::Invalid("backend"))?,
            relation: RelationId::from_id(r.get_u8()?).ok_or(WireError::Invalid("relation"))?,
            params: r.get_object()?,
            key_id: r.get_array()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationKey(KeyCore);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationKey(KeyCore);

/// Simulation trapdoor. DirectCheck has none to offer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trapdoor {
    backend: BackendId,
}

macro_rules! key_accessors {
    ($t:ty, $tag:expr) => {
        impl $t {
            pub fn backend(&self) -> BackendId {
                self.0.backend
            }

            pub fn relation(&self) -> RelationId {
                self.0.relation
            }

            pub fn params(&self) -> &RelationParams {
                &self.0.params
            }
        }

        impl Wire for $t {
            const TAG: Tag = $tag;

            fn write_body(&self, w: &mut Writer) {
                self.0.write(w);
            }

            fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
                KeyCore::read(r).map(Self)
            }
        }
    };
}

key_accessors!(EvaluationKey, Tag::EvaluationKey);
key_accessors!(VerificationKey, Tag::VerificationKey);

/// Backend-opaque proof bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proof(pub Vec<u8>);

impl Proof {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Wire for Proof {
    const TAG: Tag = Tag::Proof;

    fn write_body(&self, w: &mut Writer) {
        w.put_bytes(&self.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Proof(r.take(r.remaining())?.to_vec()))
    }
}

pub trait ProofSystem: Send + Sync {
    fn id(&self) -> BackendId;

    fn setup(
        &self,
        relation: RelationId,
        params: &RelationParams,
        rng: &mut dyn RngCore,
    ) -> Result<(EvaluationKey, VerificationKey, Trapdoor), ProofError>;

    /// Honest prover: refuses instances that do not satisfy the relation.
    fn prove(&self, ek: &EvaluationKey, phi: &Statement, w: &Witness) -> Result<Proof, ProofError>;

    /// Never panics; malformed proofs are rejected.
    fn verify(&self, vk: &VerificationKey, phi: &Statement, proof: &Proof) -> bool;

    fn simulate(&self, ek: &EvaluationKey, trap: &Trapdoor, phi: &Statement) -> Result<Proof, ProofError>;
}

pub fn backend(id: BackendId) -> Box<dyn ProofSystem> {
    match id {
        BackendId::DirectCheck => Box::new(DirectCheck),
        BackendId::Snark => Box::new(SnarkSeam),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DirectCheck;

impl DirectCheck {
    fn statement_digest(phi: &Statement) -> [u8; 32] {
        hash(&[DIGEST_TAG, &phi.to_bytes()])
    }

    fn binding(key_id: &[u8; 32], relation: RelationId, digest: &[u8; 32], witness: &[u8]) -> [u8; 32] {
        hash(&[BIND_TAG, key_id, &[relation.id()], digest, witness])
    }

    /// Builds a proof without checking the relation. Only for constructing
    /// adversarial transcripts; the verifier still re-checks everything.
    pub fn prove_unchecked(&self, ek: &EvaluationKey, phi: &Statement, w: &Witness) -> Result<Proof, ProofError> {
        if phi.relation() != ek.relation() {
            return Err(ProofError::RelationMismatch {
                key: ek.relation(),
                instance: phi.relation(),
            });
        }
        let digest = Self::statement_digest(phi);
        let witness = w.to_bytes();
        let mut out = Writer::new();
        out.put_u8(ek.relation().id());
        out.put_bytes(&digest);
        out.put_var(&witness);
        out.put_bytes(&Self::binding(&ek.0.key_id, ek.relation(), &digest, &witness));
        Ok(Proof(out.into_inner()))
    }

    fn open(vk: &VerificationKey, phi: &Statement, proof: &Proof) -> Result<Witness, WireError> {
        let mut r = Reader::new(&proof.0);
        if r.get_u8()? != vk.relation().id() {
            return Err(WireError::Invalid("relation"));
        }
        let digest: [u8; 32] = r.get_array()?;
        let witness = r.get_var()?;
        let binding: [u8; 32] = r.get_array()?;
        r.finish()?;
        if digest != Self::statement_digest(phi) {
            return Err(WireError::Invalid("statement digest"));
        }
        if binding != Self::binding(&vk.0.key_id, vk.relation(), &digest, witness) {
            return Err(WireError::Invalid("binding"));
        }
        Witness::from_bytes(witness)
    }
}

impl ProofSystem for DirectCheck {
    fn id(&self) -> BackendId {
        BackendId::DirectCheck
    }

    fn setup(
        &self,
        relation: RelationId,
        params: &RelationParams,
        rng: &mut dyn RngCore,
    ) -> Result<(EvaluationKey, VerificationKey, Trapdoor), ProofError> {
        let mut key_id = [0u8; 32];
        rng.fill_bytes(&mut key_id);
        let core = KeyCore {
            backend: BackendId::DirectCheck,
            relation,
            params: *params,
            key_id,
        };
        Ok((
            EvaluationKey(core.clone()),
            VerificationKey(core),
            Trapdoor {
                backend: BackendId::DirectCheck,
            },
        ))
    }

    fn prove(&self, ek: &EvaluationKey, phi: &Statement, w: &Witness) -> Result<Proof, ProofError> {
        if !check(phi, w, ek.params()) {
            return Err(ProofError::FalseInstance(phi.relation()));
        }
        self.prove_unchecked(ek, phi, w)
    }

    fn verify(&self, vk: &VerificationKey, phi: &Statement, proof: &Proof) -> bool {
        if vk.backend() != BackendId::DirectCheck || vk.relation() != phi.relation() {
            return false;
        }
        match Self::open(vk, phi, proof) {
            Ok(w) => check(phi, &w, vk.params()),
            Err(_) => false,
        }
    }

    fn simulate(&self, _ek: &EvaluationKey, _trap: &Trapdoor, _phi: &Statement) -> Result<Proof, ProofError> {
        Err(ProofError::SimulationUnsupported(BackendId::DirectCheck))
    }
}

/// Integration point for a circuit-based proving system.
#[derive(Debug, Clone, Copy, Default)]
pub struct SnarkSeam;

impl ProofSystem for SnarkSeam {
    fn id(&self) -> BackendId {
        BackendId::Snark
    }

    fn setup(
        &self,
        _relation: RelationId,
        _params: &RelationParams,
        _rng: &mut dyn RngCore,
    ) -> Result<(EvaluationKey, VerificationKey, Trapdoor), ProofError> {
        Err(ProofError::BackendUnavailable(BackendId::Snark))
    }

    fn prove(&self, _ek: &EvaluationKey, _phi: &Statement, _w: &Witness) -> Result<Proof, ProofError> {
        Err(ProofError::BackendUnavailable(BackendId::Snark))
    }

    fn verify(&self, _vk: &VerificationKey, _phi: &Statement, _proof: &Proof) -> bool {
        false
    }

    fn simulate(&self, _ek: &EvaluationKey, trap: &Trapdoor, _phi: &Statement) -> Result<Proof, ProofError> {
        debug_assert_eq!(trap.backend, BackendId::Snark);
        Err(ProofError::BackendUnavailable(BackendId::Snark))
    }
}
