//! `revo`: issue and verify revocations, run simulations, run a node.

mod config;
mod error;
mod keys;
mod node;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use revo_core::arl::Verdict;
use revo_core::crypto::keygen;
use revo_core::log_file::{load_log, LogWriter};
use revo_core::revocation::{InvalidReason, RevocationError};
use revo_core::sim::{self, LatencyModel, PropagationMode, SimConfig, UplinkModel};
use revo_core::tis::Untrust;
use revo_core::{
    validate_signed_set, ArlConfig, ArlMode, AttestationRevocationList, Digest256, Issuer, IssuerId,
    TrustedIssuerStorage,
};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "revo", version, about = "Gossip-based attestation revocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an issuer key pair.
    Keygen {
        /// Writes <OUT>.key and <OUT>.pub.
        #[arg(long)]
        out: PathBuf,
        /// 64 hex digits or an integer. Defaults to REVO_SEED, then the OS.
        #[arg(long)]
        seed: Option<String>,
    },
    /// Sign and append revocation sets for a list of credential hashes.
    Revoke {
        #[arg(long)]
        key: PathBuf,
        /// One hex SHA3-256 hash per line.
        #[arg(long)]
        hashes: PathBuf,
        /// Revocation log to continue and append to.
        #[arg(long)]
        arl_out: PathBuf,
        /// Hashes per signed set.
        #[arg(long, default_value_t = 1000)]
        batch: usize,
        /// Seconds since the epoch; defaults to now.
        #[arg(long)]
        published_at: Option<u64>,
    },
    /// Add an issuer key to, or remove it from, a trusted issuer register.
    Trust {
        #[arg(long)]
        tis: PathBuf,
        #[arg(long)]
        remove: bool,
        /// Hex public key or a .pub file.
        key: String,
    },
    /// Check one credential hash against a revocation log.
    Verify {
        #[arg(long)]
        arl: PathBuf,
        #[arg(long)]
        tis: PathBuf,
        /// Answer from the Bloom filter alone.
        #[arg(long)]
        bloom_only: bool,
        hash: String,
    },
    /// Summarise a revocation log.
    ArlStats {
        #[arg(long)]
        arl: PathBuf,
    },
    /// Simulate propagation for one (n, d) and print CSV.
    Simulate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        degree: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate a grid of (n, d) and print CSV.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        nodes: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        /// Also draw mean time against n.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run a gossip node over UDP.
    NodeRun(node::NodeRunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Eager,
    Periodic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UplinkArg {
    PerLink,
    Shared,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 340_000)]
    revocations: usize,
    /// Hashes per signed set; defaults to all of them in one set.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Defaults to REVO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Eager)]
    mode: ModeArg,
    /// Gossip interval in seconds (periodic mode).
    #[arg(long, default_value_t = 0.1)]
    tg: f64,
    /// Gossip fanout (periodic mode).
    #[arg(long, default_value_t = 5)]
    ng: usize,
    #[arg(long, value_enum, default_value_t = UplinkArg::PerLink)]
    uplink: UplinkArg,
    /// Upload bandwidth in bits per second.
    #[arg(long, default_value_t = 65e6)]
    bandwidth: f64,
    /// Upper bound of the uniform link latency, in milliseconds.
    #[arg(long, default_value_t = 20.0)]
    latency_ms: f64,
    /// Simulated seconds before a run is abandoned.
    #[arg(long, default_value_t = 3600.0)]
    time_cap: f64,
    /// Fraction of nodes that never send.
    #[arg(long, default_value_t = 0.0)]
    silent: f64,
    /// Simulated seconds to verify one set.
    #[arg(long, default_value_t = 0.0)]
    verify_cost: f64,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn config(&self, nodes: usize, degree: usize) -> Result<SimConfig, CliError> {
        let config = SimConfig {
            latency: LatencyModel::Uniform {
                min: 0.0,
                max: self.latency_ms / 1000.0,
            },
            bandwidth: self.bandwidth,
            revocation_count: self.revocations,
            sets_per_batch: self.batch.unwrap_or(self.revocations),
            seed: keys::sim_seed(self.seed)?,
            repetitions: self.reps,
            mode: match self.mode {
                ModeArg::Eager => PropagationMode::Eager,
                ModeArg::Periodic => PropagationMode::Periodic {
                    interval: self.tg,
                    fanout: self.ng,
                },
            },
            uplink: match self.uplink {
                UplinkArg::Shared => UplinkModel::Shared,
                UplinkArg::PerLink => UplinkModel::PerLink,
            },
            time_cap: self.time_cap,
            verify_cost: self.verify_cost,
            silent_fraction: self.silent,
            ..SimConfig::new(nodes, degree)
        };
        // Graph feasibility is judged per cell; check everything else here.
        SimConfig { nodes: 2, degree: 1, ..config.clone() }
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn emit(&self, rows: &[sim::SweepRow]) -> Result<(), CliError> {
        let csv = sim::csv_string(rows);
        match &self.out {
            Some(path) => fs::write(path, csv).map_err(CliError::io(path)),
            None => io::stdout()
                .write_all(csv.as_bytes())
                .map_err(CliError::io("<stdout>")),
        }
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn read_hashes(path: &Path) -> Result<Vec<Digest256>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut hashes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let h = Digest256::from_hex(line).ok_or_else(|| CliError::Parse {
            path: path.into(),
            reason: format!("line {}: not a 32-byte hex hash: {line:?}", i + 1),
        })?;
        hashes.push(h);
    }
    Ok(hashes)
}

fn parse_hash(text: &str) -> Result<Digest256, CliError> {
    Digest256::from_hex(text.trim())
        .ok_or_else(|| CliError::Usage(format!("not a 32-byte hex hash: {text:?}")))
}

fn cmd_keygen(out: &Path, seed: Option<&str>) -> Result<(), CliError> {
    let seed = keys::key_seed(seed)?;
    let keypair = keygen(&seed)?;
    keys::write_keypair(out, &keypair)?;
    println!("{}", IssuerId::from_public_key(&keypair.public_key));
    Ok(())
}

fn cmd_revoke(
    key: &Path,
    hashes: &Path,
    arl_out: &Path,
    batch: usize,
    published_at: Option<u64>,
) -> Result<(), CliError> {
    if batch == 0 {
        return Err(CliError::Usage("--batch must be at least 1".into()));
    }
    let keypair = keys::read_secret_key(key)?;
    let hashes = read_hashes(hashes)?;
    if hashes.is_empty() {
        return Err(RevocationError::Invalid(InvalidReason::EmptySet).into());
    }
    let log = load_log(arl_out).map_err(CliError::log(arl_out))?;
    let own: Vec<_> = log
        .sets
        .iter()
        .filter(|s| s.set.issuer_public_key == keypair.public_key)
        .map(|s| s.as_ref())
        .collect();
    let mut issuer = Issuer::resume(keypair, own).map_err(|e| CliError::Parse {
        path: arl_out.into(),
        reason: format!("existing sets are inconsistent: {e}"),
    })?;
    let sets = issuer.issue_batches(published_at.unwrap_or_else(now_secs), &hashes, batch)?;
    let mut writer = LogWriter::open(arl_out, Some(log.valid_len as u64)).map_err(CliError::log(arl_out))?;
    for set in &sets {
        writer.append(set).map_err(CliError::log(arl_out))?;
        println!("{} {} {}", issuer.id(), set.set.version, set.set.hashes.len());
    }
    writer.sync().map_err(CliError::log(arl_out))?;
    Ok(())
}

fn cmd_trust(tis_path: &Path, remove: bool, key: &str) -> Result<(), CliError> {
    let pk = keys::public_key_arg(key)?;
    let mut tis = TrustedIssuerStorage::load(tis_path).map_err(CliError::tis(tis_path))?;
    if remove {
        let id = IssuerId::from_public_key(&pk);
        match tis.untrust(&id) {
            Untrust::Removed => println!("removed {id}"),
            Untrust::Absent => println!("absent {id}"),
        }
    } else {
        let id = tis.trust(&pk).map_err(CliError::tis(key))?;
        println!("trusted {id}");
    }
    tis.save(tis_path).map_err(CliError::tis(tis_path))
}

/// Trusted, validly signed sets from a log.
fn load_arl(arl: &Path, tis: &TrustedIssuerStorage, mode: ArlMode) -> Result<AttestationRevocationList, CliError> {
    let log = load_log(arl).map_err(CliError::log(arl))?;
    let mut list = AttestationRevocationList::new(ArlConfig {
        mode,
        ..ArlConfig::default()
    });
    for set in log.sets {
        if tis.contains(&set.issuer_id()) && validate_signed_set(&set).is_ok() {
            list.store(set);
        }
    }
    Ok(list)
}

fn cmd_verify(arl: &Path, tis_path: &Path, bloom_only: bool, hash: &str) -> Result<(), CliError> {
    let hash = parse_hash(hash)?;
    let tis = TrustedIssuerStorage::load(tis_path).map_err(CliError::tis(tis_path))?;
    let mode = if bloom_only { ArlMode::BloomOnly } else { ArlMode::Exact };
    let list = load_arl(arl, &tis, mode)?;
    match list.verify_credential(&hash) {
        Verdict::Revoked(ids) => {
            let ids: Vec<String> = ids.iter().map(ToString::to_string).collect();
            println!("revoked {}", ids.join(" "));
        }
        Verdict::ProbablyRevoked => println!("probably-revoked"),
        Verdict::NotRevoked => println!("not-revoked"),
    }
    Ok(())
}

fn cmd_arl_stats(arl: &Path) -> Result<(), CliError> {
    let log = load_log(arl).map_err(CliError::log(arl))?;
    let mut list = AttestationRevocationList::default();
    let mut invalid = 0;
    for set in &log.sets {
        if validate_signed_set(set).is_ok() {
            list.store(set.clone());
        } else {
            invalid += 1;
        }
    }
    let stats = list.stats();
    println!("records {}", log.sets.len());
    println!("invalid {invalid}");
    println!("damaged_tail {}", log.tail_error.is_some());
    println!("issuers {}", stats.issuers);
    println!("sets {}", stats.sets);
    println!("hashes {}", stats.hashes);
    println!("filter_bits {}", stats.filter_bits);
    println!("filter_occupancy {:.6}", stats.filter_occupancy);
    println!("filter_fpp {:.3e}", list.filter().expected_fpp());
    for issuer in list.issuers() {
        let contiguous = list.highest_contiguous(&issuer).map_or(0, |v| v.get());
        let versions = list.versions(&issuer);
        println!("issuer {issuer} contiguous={contiguous} versions={}", versions.len());
    }
    Ok(())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Keygen { out, seed } => cmd_keygen(&out, seed.as_deref()),
        Command::Revoke {
            key,
            hashes,
            arl_out,
            batch,
            published_at,
        } => cmd_revoke(&key, &hashes, &arl_out, batch, published_at),
        Command::Trust { tis, remove, key } => cmd_trust(&tis, remove, &key),
        Command::Verify {
            arl,
            tis,
            bloom_only,
            hash,
        } => cmd_verify(&arl, &tis, bloom_only, &hash),
        Command::ArlStats { arl } => cmd_arl_stats(&arl),
        Command::Simulate { nodes, degree, sim } => {
            let config = sim.config(nodes, degree)?;
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            sim.emit(&sim::sweep_cell(&config))
        }
        Command::Sweep {
            nodes,
            degrees,
            svg,
            sim,
        } => {
            let template = sim.config(nodes[0], degrees[0])?;
            let rows = sim::sweep(&template, &nodes, &degrees);
            sim.emit(&rows)?;
            if let Some(path) = svg {
                fs::write(&path, sim::render_svg(&rows)).map_err(CliError::io(&path))?;
            }
            Ok(())
        }
        Command::NodeRun(args) => node::run(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("revo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
