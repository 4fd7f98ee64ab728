//! On-disk state for the step-by-step subcommands.
//!
//! A state directory holds `params.bin`, `server.txt`, `clients.txt` and
//! GenRand bundles. Binary objects use the wire format; text files hold one
//! `key=value` or one record per line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use vldp::primitives::{PublicKey, SigningKeyPair, Wire};
use vldp::protocol::{keygen, PublicParams, RandomnessBundle, Scheme, ServerState, TrustedEnvironment};
use vldp::relations::{EvaluationKey, Timestamp, VerificationKey};

use crate::error::CliError;

pub const PARAMS_FILE: &str = "params.bin";
pub const SERVER_FILE: &str = "server.txt";
pub const CLIENTS_FILE: &str = "clients.txt";

pub fn load_params(dir: &Path) -> Result<PublicParams, CliError> {
    PublicParams::from_bytes(&fs::read(dir.join(PARAMS_FILE))?).map_err(CliError::wire("public parameters"))
}

pub fn save_params(dir: &Path, pp: &PublicParams) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PARAMS_FILE), pp.to_bytes())?;
    Ok(())
}

/// A client's signing seed and the last tick its environment signed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientRecord {
    pub seed: [u8; 32],
    pub last_tick: Option<Timestamp>,
}

impl ClientRecord {
    pub fn environment(&self, pp: &PublicParams) -> TrustedEnvironment {
        TrustedEnvironment::resume(SigningKeyPair::from_seed(self.seed), *pp.randomizer(), self.last_tick)
    }

    pub fn public(&self) -> PublicKey {
        SigningKeyPair::from_seed(self.seed).public()
    }
}

fn state_err(line: usize, reason: impl ToString) -> CliError {
    CliError::State {
        line,
        reason: reason.to_string(),
    }
}

fn hex32(line: usize, s: &str) -> Result<[u8; 32], CliError> {
    let v = hex::decode(s).map_err(|e| state_err(line, e))?;
    v.try_into().map_err(|_| state_err(line, "expected 32 bytes"))
}

pub fn load_clients(dir: &Path) -> Result<Vec<ClientRecord>, CliError> {
    let text = fs::read_to_string(dir.join(CLIENTS_FILE))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let (seed, tick) = l.split_once(' ').ok_or_else(|| state_err(line, "expected `<seed> <tick>`"))?;
            let last_tick = match tick.trim() {
                "-" => None,
                t => Some(t.parse().map_err(|_| state_err(line, "bad tick"))?),
            };
            Ok(ClientRecord {
                seed: hex32(line, seed)?,
                last_tick,
            })
        })
        .collect()
}

pub fn save_clients(dir: &Path, clients: &[ClientRecord]) -> Result<(), CliError> {
    let mut s = String::new();
    for c in clients {
        let tick = c.last_tick.map_or("-".to_string(), |t| t.to_string());
        let _ = writeln!(s, "{} {tick}", hex::encode(c.seed));
    }
    fs::write(dir.join(CLIENTS_FILE), s)?;
    Ok(())
}

pub fn save_server(dir: &Path, server: &ServerState) -> Result<(), CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "signing_seed={}", hex::encode(server.signing_seed()));
    let _ = writeln!(s, "ek={}", hex::encode(server.ek().to_bytes()));
    let _ = writeln!(s, "vk={}", hex::encode(server.vk().to_bytes()));
    let mut registry: Vec<_> = server.registry().copied().collect();
    registry.sort();
    for pk in registry {
        let _ = writeln!(s, "registry={}", hex::encode(pk.0));
    }
    for (pk, j) in server.consumed_entries() {
        let _ = writeln!(s, "consumed={}:{j}", hex::encode(pk.0));
    }
    fs::write(dir.join(SERVER_FILE), s)?;
    Ok(())
}

pub fn load_server(dir: &Path, pp: &PublicParams) -> Result<ServerState, CliError> {
    let text = fs::read_to_string(dir.join(SERVER_FILE))?;
    let (mut seed, mut ek, mut vk) = (None, None, None);
    let mut registry = Vec::new();
    let mut consumed = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| state_err(line, "expected `key=value`"))?;
        let bytes = |v: &str| hex::decode(v).map_err(|e| state_err(line, e));
        match k {
            "signing_seed" => seed = Some(hex32(line, v)?),
            "ek" => ek = Some(EvaluationKey::from_bytes(&bytes(v)?).map_err(CliError::wire("evaluation key"))?),
            "vk" => vk = Some(VerificationKey::from_bytes(&bytes(v)?).map_err(CliError::wire("verification key"))?),
            "registry" => registry.push(PublicKey(hex32(line, v)?)),
            "consumed" => {
                let (pk, j) = v.split_once(':').ok_or_else(|| state_err(line, "expected `<pk>:<j>`"))?;
                let j = j.parse().map_err(|_| state_err(line, "bad interval"))?;
                consumed.push((PublicKey(hex32(line, pk)?), j));
            }
            other => return Err(state_err(line, format!("unknown key `{other}`"))),
        }
    }
    let missing = |what: &str| state_err(0, format!("missing `{what}`"));
    let server = ServerState::from_parts(
        pp.clone(),
        seed.ok_or_else(|| missing("signing_seed"))?,
        ek.ok_or_else(|| missing("ek"))?,
        vk.ok_or_else(|| missing("vk"))?,
        registry,
    );
    server.restore_consumed(consumed);
    Ok(server)
}

/// Fresh client seeds and a server that allows exactly those clients.
pub fn keygen_all<R: RngCore + rand::CryptoRng>(
    pp: &PublicParams,
    clients: usize,
    rng: &mut R,
) -> Result<(ServerState, Vec<ClientRecord>), CliError> {
    let records: Vec<ClientRecord> = (0..clients)
        .map(|_| {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            ClientRecord { seed, last_tick: None }
        })
        .collect();
    let server = keygen(pp, records.iter().map(ClientRecord::public), rng)?;
    Ok((server, records))
}

/// Base keeps one bundle per interval; the other schemes one per client.
pub fn bundle_path(dir: &Path, scheme: Scheme, client: usize, j: u32) -> PathBuf {
    match scheme {
        Scheme::Base => dir.join(format!("bundle-{client}-{j}.bin")),
        _ => dir.join(format!("bundle-{client}.bin")),
    }
}

pub fn load_bundle(path: &Path) -> Result<RandomnessBundle, CliError> {
    RandomnessBundle::from_bytes(&fs::read(path)?).map_err(CliError::wire("randomness bundle"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vldp::harness::{default_randomizer, sub_rng, GRID_STEP};
    use vldp::protocol::{setup, TimeGrid};

    #[test]
    fn server_and_clients_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = sub_rng(3, 0);
        let pp = setup(
            Scheme::Expand,
            TimeGrid::uniform(3, GRID_STEP).unwrap(),
            default_randomizer(),
            &mut rng,
        )
        .unwrap();
        let (server, mut clients) = keygen_all(&pp, 3, &mut rng).unwrap();
        server.restore_consumed([(clients[1].public(), 0)]);
        clients[2].last_tick = Some(17);
        save_params(dir.path(), &pp).unwrap();
        save_server(dir.path(), &server).unwrap();
        save_clients(dir.path(), &clients).unwrap();

        let pp2 = load_params(dir.path()).unwrap();
        assert_eq!(pp2, pp);
        let s2 = load_server(dir.path(), &pp2).unwrap();
        assert_eq!(s2.pk_s(), server.pk_s());
        assert_eq!(s2.consumed_entries(), server.consumed_entries());
        assert_eq!(s2.ek(), server.ek());
        assert!(clients.iter().all(|c| s2.is_registered(&c.public())));
        assert_eq!(load_clients(dir.path()).unwrap(), clients);
    }
}
