//! `revo node-run`: the gossip node over UDP.

use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Args;
use log::info;
use revo_core::arl::ArlMode;
use revo_core::crypto::sha3_256;
use revo_core::log_file::{load_log, LogWriter};
use revo_core::udp::UdpRunner;
use revo_core::{ArlConfig, Node, NodeConfig, ReceiveOutcome, TrustedIssuerStorage};

use crate::config::KeyValues;
use crate::error::CliError;
use crate::keys::{public_key_arg, sim_seed};

const CONFIG_KEYS: &[&str] = &[
    "bind",
    "neighbour",
    "tis",
    "trust",
    "arl",
    "tg_ms",
    "ng",
    "duration",
    "status_ms",
    "eager",
    "bloom_only",
    "send_gap_us",
];

#[derive(Debug, Args)]
pub struct NodeRunArgs {
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// UDP address to listen on.
    #[arg(long)]
    bind: Option<String>,
    /// Peer address; repeat for each neighbour.
    #[arg(long = "neighbour", visible_alias = "neighbor")]
    neighbours: Vec<String>,
    /// Trusted issuer register.
    #[arg(long)]
    tis: Option<PathBuf>,
    /// Extra issuer key (hex or .pub file) to trust for this run.
    #[arg(long)]
    trust: Vec<String>,
    /// Revocation log, replayed at start and appended to as sets arrive.
    #[arg(long)]
    arl: Option<PathBuf>,
    /// Gossip interval in milliseconds.
    #[arg(long)]
    tg_ms: Option<u64>,
    /// Neighbours advertised to per round.
    #[arg(long)]
    ng: Option<usize>,
    /// Exit after this many seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Milliseconds between status lines.
    #[arg(long)]
    status_ms: Option<u64>,
    /// Advertise to every neighbour when a new set arrives.
    #[arg(long)]
    eager: bool,
    /// Keep only the Bloom filter; do not serve sets.
    #[arg(long)]
    bloom_only: bool,
    /// Microseconds between outgoing datagrams.
    #[arg(long)]
    send_gap_us: Option<u64>,
}

fn resolve(addr: &str) -> Result<SocketAddr, CliError> {
    addr.to_socket_addrs()
        .map_err(|e| CliError::Net {
            context: format!("resolving {addr}"),
            source: e,
        })?
        .next()
        .ok_or_else(|| CliError::Usage(format!("{addr} resolves to nothing")))
}

fn flag_or<T: std::str::FromStr>(flag: Option<T>, kv: &KeyValues, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => kv.parsed(key),
    }
}

fn status_line(runner: &UdpRunner, started: Instant) -> String {
    let node = runner.node();
    let arl = node.arl();
    let mut line = format!(
        "status t={:.1}s sets={} hashes={}",
        started.elapsed().as_secs_f64(),
        arl.set_count(),
        arl.hash_count()
    );
    for issuer in arl.issuers() {
        let v = arl.highest_contiguous(&issuer).map_or(0, |v| v.get());
        line += &format!(" {}={v}", &issuer.digest().to_hex()[..16]);
    }
    line
}

pub fn run(args: NodeRunArgs) -> Result<(), CliError> {
    let kv = match &args.config {
        Some(path) => KeyValues::load(path, CONFIG_KEYS)?,
        None => KeyValues::default(),
    };
    let bind = args
        .bind
        .clone()
        .or_else(|| kv.get("bind").map(String::from))
        .ok_or_else(|| CliError::Usage("node-run needs --bind".into()))?;
    let neighbours = if args.neighbours.is_empty() {
        kv.all("neighbour")
    } else {
        args.neighbours.clone()
    };
    let tis_path = args.tis.clone().or_else(|| kv.get("tis").map(PathBuf::from));
    let arl_path = args.arl.clone().or_else(|| kv.get("arl").map(PathBuf::from));
    let trust = if args.trust.is_empty() { kv.all("trust") } else { args.trust.clone() };
    let tg_ms = flag_or(args.tg_ms, &kv, "tg_ms")?.unwrap_or(100);
    let ng = flag_or(args.ng, &kv, "ng")?.unwrap_or(5);
    let duration = flag_or(args.duration, &kv, "duration")?;
    let status_ms = flag_or(args.status_ms, &kv, "status_ms")?.unwrap_or(1000);
    let eager = args.eager || flag_or(None::<bool>, &kv, "eager")?.unwrap_or(false);
    let bloom_only = args.bloom_only || flag_or(None::<bool>, &kv, "bloom_only")?.unwrap_or(false);
    let send_gap_us = flag_or(args.send_gap_us, &kv, "send_gap_us")?.unwrap_or(500);

    let mut tis = match &tis_path {
        Some(p) => TrustedIssuerStorage::load(p).map_err(CliError::tis(p))?,
        None => TrustedIssuerStorage::new(),
    };
    for key in &trust {
        let pk = public_key_arg(key)?;
        tis.trust(&pk).map_err(CliError::tis("--trust"))?;
    }

    let local = resolve(&bind)?;
    let peers = neighbours.iter().map(|n| resolve(n)).collect::<Result<Vec<_>, _>>()?;
    let config = NodeConfig {
        gossip_fanout: ng,
        mode: if bloom_only { ArlMode::BloomOnly } else { ArlMode::Exact },
        eager_push: eager,
        ..NodeConfig::with_interval(Duration::from_millis(tg_ms))
    };
    let seed = sim_seed(None)? ^ u64::from_be_bytes(sha3_256(bind.as_bytes()).0[..8].try_into().unwrap());
    let mut node: Node<SocketAddr> = Node::new(config, tis, ArlConfig::default(), peers, seed)?;

    let mut writer = None;
    if let Some(path) = &arl_path {
        let contents = load_log(path).map_err(CliError::log(path))?;
        if let Some(e) = &contents.tail_error {
            info!("{}: dropping damaged tail after byte {}: {e}", path.display(), contents.valid_len);
        }
        let mut restored = 0;
        for set in contents.sets {
            if node.restore(set) == ReceiveOutcome::Stored {
                restored += 1;
            }
        }
        info!("restored {restored} sets from {}", path.display());
        writer = Some(LogWriter::open(path, Some(contents.valid_len as u64)).map_err(CliError::log(path))?);
    }

    let mut runner = UdpRunner::bind(local, node)
        .map_err(|e| CliError::Net {
            context: format!("binding {bind}"),
            source: e,
        })?
        .with_send_gap(Duration::from_micros(send_gap_us));
    if let Some(w) = writer {
        runner = runner.with_log(w);
    }
    let local = runner.local_addr().map_err(|e| CliError::Net {
        context: "local address".into(),
        source: e,
    })?;
    eprintln!("listening on {local}");

    let started = Instant::now();
    let deadline = duration.map(|d| started + Duration::from_secs_f64(d));
    let stop = Arc::new(AtomicBool::new(false));
    let result = runner.run(
        deadline,
        &stop,
        Duration::from_millis(status_ms),
        &mut |r| eprintln!("{}", status_line(r, started)),
    );
    eprintln!("{}", status_line(&runner, started));
    let stats = runner.stats();
    eprintln!(
        "stopped: datagrams in={} out={} undecodable={}",
        stats.datagrams_in, stats.datagrams_out, stats.decode_errors
    );
    match (result, &arl_path) {
        (Ok(()), _) => Ok(()),
        (Err(e), Some(p)) => Err(CliError::log(p)(e)),
        (Err(e), None) => Err(CliError::log("<arl>")(e)),
    }
}
