//! Framed protocol messages.
//!
//! Payload bodies use raw fixed-width fields, so a GenRand request is 64 bytes
//! (65 in Base with a one-byte tick) and a response is 96 bytes. The frame
//! header adds three bytes on the wire.

use super::{PublicParams, Scheme};
use crate::ldp::LdpValue;
use crate::primitives::wire::frame;
use crate::primitives::{
    Commitment, MerkleRoot, PrfKey, PublicKey, Reader, Signature, Tag, Wire, WireError, Writer,
};
use crate::relations::{Proof, Timestamp};

/// First GenRand message: `pk_i`, the client's commitment (Base, Shuffle) or
/// Merkle root (Expand), and in Base the interval end `t_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRandRequest {
    pub pk: PublicKey,
    pub binding: [u8; 32],
    pub t_j: Option<Timestamp>,
}

impl GenRandRequest {
    fn body(&self, pp: &PublicParams) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_bytes(&self.pk.0);
        w.put_bytes(&self.binding);
        if let Some(t) = self.t_j {
            let width = pp.grid.tick_width();
            w.put_bytes(&t.to_be_bytes()[8 - width..]);
        }
        w.into_inner()
    }

    pub fn payload_len(&self, pp: &PublicParams) -> usize {
        self.body(pp).len()
    }

    pub fn encode(&self, pp: &PublicParams) -> Vec<u8> {
        frame(Tag::GenRandRequest, &self.body(pp))
    }

    pub fn decode(bytes: &[u8], pp: &PublicParams) -> Result<Self, WireError> {
        let mut outer = Reader::new(bytes);
        let mut r = outer.get_frame(Tag::GenRandRequest)?;
        outer.finish()?;
        let pk = PublicKey(r.get_array()?);
        let binding = r.get_array()?;
        let t_j = match pp.scheme {
            Scheme::Base => {
                let raw = r.take(pp.grid.tick_width())?;
                Some(raw.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64))
            }
            _ => None,
        };
        r.finish()?;
        Ok(Self { pk, binding, t_j })
    }

    pub fn commitment(&self) -> Commitment {
        Commitment(self.binding)
    }

    pub fn root(&self) -> MerkleRoot {
        MerkleRoot(self.binding)
    }
}

/// Second GenRand message: `(k_s, sigma_s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRandResponse {
    pub k_s: PrfKey,
    pub sigma_s: Signature,
}

impl Wire for GenRandResponse {
    const TAG: Tag = Tag::GenRandResponse;

    fn write_body(&self, w: &mut Writer) {
        w.put_bytes(&self.k_s.0);
        w.put_bytes(&self.sigma_s.0);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(Self {
            k_s: PrfKey(r.get_array()?),
            sigma_s: Signature(r.get_array()?),
        })
    }
}

/// Public values `tau` sent next to a submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PublicValues {
    Base {
        pk: PublicKey,
        cm: Commitment,
        k_s: PrfKey,
        sigma_s: Signature,
    },
    Expand {
        pk: PublicKey,
        root: MerkleRoot,
        k_s: PrfKey,
        sigma_s: Signature,
    },
    /// Shuffle sends nothing that could link submissions.
    Empty,
}

impl PublicValues {
    pub fn to_raw(&self) -> Vec<u8> {
        match self {
            PublicValues::Base { pk, cm, k_s, sigma_s } => [&pk.0[..], &cm.0, &k_s.0, &sigma_s.0].concat(),
            PublicValues::Expand { pk, root, k_s, sigma_s } => [&pk.0[..], &root.0, &k_s.0, &sigma_s.0].concat(),
            PublicValues::Empty => Vec::new(),
        }
    }

    fn read_raw(r: &mut Reader<'_>, scheme: Scheme) -> Result<Self, WireError> {
        Ok(match scheme {
            Scheme::Base => PublicValues::Base {
                pk: PublicKey(r.get_array()?),
                cm: Commitment(r.get_array()?),
                k_s: PrfKey(r.get_array()?),
                sigma_s: Signature(r.get_array()?),
            },
            Scheme::Expand => PublicValues::Expand {
                pk: PublicKey(r.get_array()?),
                root: MerkleRoot(r.get_array()?),
                k_s: PrfKey(r.get_array()?),
                sigma_s: Signature(r.get_array()?),
            },
            Scheme::Shuffle => PublicValues::Empty,
        })
    }
}

/// Submission `(x_tilde, pi, tau)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizeOutput {
    pub x_tilde: LdpValue,
    pub proof: Proof,
    pub tau: PublicValues,
}

impl RandomizeOutput {
    fn body(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_u64(self.x_tilde.0);
        w.put_var(&self.proof.0);
        w.put_bytes(&self.tau.to_raw());
        w.into_inner()
    }

    pub fn payload_len(&self) -> usize {
        self.body().len()
    }

    pub fn encode(&self) -> Vec<u8> {
        frame(Tag::Submit, &self.body())
    }

    pub fn decode(bytes: &[u8], scheme: Scheme) -> Result<Self, WireError> {
        let mut outer = Reader::new(bytes);
        let mut r = outer.get_frame(Tag::Submit)?;
        outer.finish()?;
        let x_tilde = LdpValue(r.get_u64()?);
        let proof = Proof(r.get_var()?.to_vec());
        let tau = PublicValues::read_raw(&mut r, scheme)?;
        r.finish()?;
        Ok(Self { x_tilde, proof, tau })
    }
}
