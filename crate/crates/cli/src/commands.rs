use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vldp::harness::{
    attack_catalog, exp_completeness, exp_shuffle_ind, exp_soundness, exp_zero_knowledge, run_attack, sub_rng,
    ExperimentReport,
};
use vldp::primitives::Wire;
use vldp::protocol::{genrand_request, randomize, Scheme};
use vldp::relations::BackendId;

use crate::bench::{bench, bench_csv};
use crate::config::{parse_entries, RunConfig};
use crate::dataset::{parse_value, synth_dataset};
use crate::error::CliError;
use crate::pipeline::{load_inputs, report_text, run_pipeline, write_outputs};
use crate::store::{
    bundle_path, keygen_all, load_bundle, load_clients, load_params, load_server, save_clients, save_params,
    save_server,
};

#[derive(Debug, Parser)]
#[command(name = "vldp", version, about = "Verifiable local differential privacy toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write public parameters into a state directory.
    Setup {
        #[arg(long)]
        dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate client keys and a server that allows them.
    Keygen {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        clients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run GenRand for one client and store its bundle.
    Genrand {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        client: usize,
        /// Interval; required by the base scheme.
        #[arg(long, default_value_t = 1)]
        interval: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sign, randomize and prove one input; writes the framed submission.
    Randomize {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        client: usize,
        #[arg(long)]
        interval: u32,
        #[arg(long)]
        value: String,
        /// Signing tick; defaults to the first tick of the interval.
        #[arg(long)]
        tick: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a submission and print the randomized value.
    Verify {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        interval: u32,
        #[arg(long)]
        submission: PathBuf,
    },
    /// Simulate a full deployment and write results, bench and report files.
    Run(ConfigArgs),
    /// Time each protocol phase.
    Bench(ConfigArgs),
    /// Run manipulation attacks and check that each is rejected.
    Attack {
        /// Scheme name, or `all`.
        #[arg(long, default_value = "all")]
        scheme: String,
        /// Attack name; all attacks when absent.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one security experiment and print its report.
    Experiment {
        /// completeness, soundness, shuffle-ind or zero-knowledge.
        kind: String,
        #[arg(long, default_value = "shuffle")]
        scheme: String,
        #[arg(long, default_value_t = 20)]
        clients: usize,
        #[arg(long, default_value_t = 5)]
        intervals: u32,
        #[arg(long, default_value = "direct-check")]
        backend: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic dataset as CSV.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A config file plus per-key overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub clients: Option<String>,
    #[arg(long)]
    pub intervals: Option<String>,
    #[arg(long)]
    pub randomizer: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub width: Option<String>,
    #[arg(long)]
    pub merkle_depth: Option<String>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub missing: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub repeats: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut entries = match &self.config {
            Some(p) => parse_entries(&fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        let flags = [
            ("scheme", &self.scheme),
            ("clients", &self.clients),
            ("intervals", &self.intervals),
            ("randomizer", &self.randomizer),
            ("k", &self.k),
            ("gamma", &self.gamma),
            ("epsilon", &self.epsilon),
            ("width", &self.width),
            ("merkle_depth", &self.merkle_depth),
            ("backend", &self.backend),
            ("seed", &self.seed),
            ("dataset", &self.dataset),
            ("missing", &self.missing),
            ("output", &self.output),
            ("repeats", &self.repeats),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                // A flag for gamma replaces an epsilon from the file and vice versa.
                if key == "gamma" || key == "epsilon" {
                    entries.retain(|(k, _)| k != "gamma" && k != "epsilon");
                }
                entries.push((key.to_string(), v.clone()));
            }
        }
        Ok(RunConfig::from_entries(&entries)?)
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn client_index(n: usize, i: usize) -> Result<(), CliError> {
    if i >= n {
        return Err(CliError::Usage(format!("client {i} out of range; {n} clients exist")));
    }
    Ok(())
}

fn genrand_step(dir: &Path, client: usize, interval: u32, seed: u64) -> Result<PathBuf, CliError> {
    let pp = load_params(dir)?;
    let server = load_server(dir, &pp)?;
    let clients = load_clients(dir)?;
    client_index(clients.len(), client)?;
    let mut rng = sub_rng(seed, 1 << 40 | client as u64);
    let j = (pp.scheme == Scheme::Base).then_some(interval);
    let (pending, req) = genrand_request(&pp, clients[client].public(), j, &mut rng)?;
    let resp = server
        .handle_genrand_bytes(&req.encode(&pp), &mut rng)
        .map_err(CliError::Rejected)?;
    save_server(dir, &server)?;
    let bundle = pending.finish(&server.pk_s(), &resp)?;
    let path = bundle_path(dir, pp.scheme, client, interval);
    fs::write(&path, bundle.to_bytes())?;
    Ok(path)
}

fn write_report(out: &mut dyn Write, r: &ExperimentReport) -> Result<(), CliError> {
    out.write_all(r.to_kv().as_bytes())?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Setup { dir, config } => {
            let cfg = config.resolve()?;
            let mut rng = sub_rng(cfg.seed, 0);
            let options = vldp::protocol::SetupOptions {
                backend: cfg.backend,
                merkle_depth: cfg.merkle_depth,
                ..Default::default()
            };
            let grid = vldp::protocol::TimeGrid::uniform(cfg.intervals, vldp::harness::GRID_STEP)?;
            let pp = vldp::protocol::setup_with(cfg.scheme, grid, cfg.randomizer()?, options, &mut rng)?;
            save_params(&dir, &pp)?;
            writeln!(out, "wrote {}", dir.join(crate::store::PARAMS_FILE).display())?;
        }
        Command::Keygen { dir, clients, seed } => {
            let pp = load_params(&dir)?;
            let (server, records) = keygen_all(&pp, clients, &mut sub_rng(seed, 0))?;
            save_server(&dir, &server)?;
            save_clients(&dir, &records)?;
            writeln!(out, "pk_s={}", hex::encode(server.pk_s().0))?;
        }
        Command::Genrand {
            dir,
            client,
            interval,
            seed,
        } => {
            let path = genrand_step(&dir, client, interval, seed)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Randomize {
            dir,
            client,
            interval,
            value,
            tick,
            out: dest,
        } => {
            let pp = load_params(&dir)?;
            let server = load_server(&dir, &pp)?;
            let mut clients = load_clients(&dir)?;
            client_index(clients.len(), client)?;
            let x = parse_value(pp.randomizer(), &value)
                .map_err(|reason| CliError::Data(crate::dataset::DataError::Row { line: 0, reason }))?;
            let bundle = load_bundle(&bundle_path(&dir, pp.scheme, client, interval))?;
            let (t_prev, _) = pp.grid.window(interval)?;
            let mut te = clients[client].environment(&pp);
            let input = te.sign(x, tick.unwrap_or(t_prev + 1))?;
            let sub = randomize(&pp, server.ek(), interval, &bundle, &input)?;
            clients[client].last_tick = te.last_tick();
            save_clients(&dir, &clients)?;
            fs::write(&dest, sub.encode())?;
            writeln!(out, "x_tilde={}", sub.x_tilde)?;
        }
        Command::Verify {
            dir,
            interval,
            submission,
        } => {
            let pp = load_params(&dir)?;
            let server = load_server(&dir, &pp)?;
            let v = server
                .verify_bytes(interval, &fs::read(submission)?)
                .map_err(CliError::Rejected)?;
            writeln!(out, "accepted x_tilde={v}")?;
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let inputs = load_inputs(&cfg, &cfg.randomizer()?)?;
            let run = run_pipeline(&cfg, &inputs)?;
            write_outputs(&cfg.output, &cfg, &run)?;
            out.write_all(report_text(&cfg, &run).as_bytes())?;
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            let records = bench(&cfg, cfg.repeats)?;
            let csv = bench_csv(&records)?;
            fs::create_dir_all(&cfg.output)?;
            fs::write(cfg.output.join("bench.csv"), &csv)?;
            out.write_all(csv.as_bytes())?;
        }
        Command::Attack { scheme, name, seed } => {
            let schemes = match scheme.as_str() {
                "all" => Scheme::ALL.to_vec(),
                s => vec![parse_scheme(s)?],
            };
            let catalog: Vec<_> = attack_catalog()
                .into_iter()
                .filter(|a| name.as_deref().is_none_or(|n| n == a.name))
                .collect();
            if catalog.is_empty() {
                return Err(CliError::Usage(format!("no attack named `{}`", name.unwrap_or_default())));
            }
            let (mut failed, mut total) = (0, 0);
            for s in schemes {
                for (i, a) in catalog.iter().enumerate().filter(|(_, a)| a.targets(s)) {
                    let o = run_attack(a, s, seed.wrapping_add(i as u64))?;
                    total += 1;
                    if !o.passed() {
                        failed += 1;
                    }
                    let observed = o.observed.map_or("accepted", |r| r.code());
                    let verdict = if o.passed() { "rejected" } else { "FAILED" };
                    writeln!(out, "{s} {} expected={} observed={observed} {verdict}", a.name, a.expected.code())?;
                }
            }
            if failed > 0 {
                return Err(CliError::AttacksFailed { failed, total });
            }
        }
        Command::Experiment {
            kind,
            scheme,
            clients,
            intervals,
            backend,
            seed,
        } => {
            let scheme = parse_scheme(&scheme)?;
            let backend: BackendId = backend.parse().map_err(CliError::Usage)?;
            let report = match kind.as_str() {
                "completeness" => exp_completeness(scheme, clients, intervals, seed)?,
                "soundness" => exp_soundness(scheme, &attack_catalog(), seed)?,
                "shuffle-ind" => exp_shuffle_ind(seed, backend, false)?,
                "zero-knowledge" => exp_zero_knowledge(seed, backend)?,
                other => return Err(CliError::Usage(format!("unknown experiment `{other}`"))),
            };
            write_report(out, &report)?;
        }
        Command::Synth { config, out: dest } => {
            let cfg = config.resolve()?;
            let crate::config::DatasetSource::Synthetic(spec) = &cfg.dataset else {
                return Err(CliError::Usage("synth needs a `synthetic:` dataset".into()));
            };
            let inputs = synth_dataset(&cfg.randomizer()?, cfg.clients, cfg.intervals, spec, cfg.seed)?;
            fs::write(&dest, inputs.to_csv()?)?;
            writeln!(out, "wrote {} rows to {}", inputs.n() * inputs.intervals() as usize, dest.display())?;
        }
    }
    Ok(())
}

