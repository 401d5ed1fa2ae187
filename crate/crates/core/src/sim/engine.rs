//! Discrete-event propagation of one issuer's revocations over a graph.
//!
//! Every node is a real [`Node`]; the engine only supplies the clock and the
//! links. A message of `b` bytes sent by `u` at time `t` reaches `v` at
//! `t + queueing + b*8/bandwidth + latency(u, v)`, where queueing depends on
//! the [`UplinkModel`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};
use std::sync::Arc;
use std::time::Duration;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::graph::{generate_regular_graph, GraphError, LatencyModel, WeightedGraph};
use crate::arl::ArlConfig;
use crate::crypto::{keygen, sha3_256_parts};
use crate::gossip::{ConfigError, MemoVerifier, Node, NodeConfig, PublishError, ReceiveOutcome};
use crate::revocation::{CredentialHash, Issuer, IssuerId, SignedRevocationSet, VersionLabel};
use crate::tis::TrustedIssuerStorage;
use crate::wire::Message;

/// Seconds to push `bytes` through an uplink of `bandwidth` bits/s.
pub fn transfer_time(bytes: u64, bandwidth: f64) -> f64 {
    bytes as f64 * 8.0 / bandwidth
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropagationMode {
    /// Payloads are forwarded to every neighbour on first reception.
    Eager,
    /// Advertise/request/send rounds every `interval` seconds to `fanout`
    /// random neighbours.
    Periodic { interval: f64, fanout: usize },
}

impl PropagationMode {
    pub fn label(&self) -> String {
        match self {
            PropagationMode::Eager => "eager".into(),
            PropagationMode::Periodic { interval, fanout } => format!("periodic:{interval}:{fanout}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UplinkModel {
    /// Every transfer proceeds at full bandwidth regardless of others.
    #[default]
    PerLink,
    /// One FIFO upload queue per node, shared by all its links.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub degree: usize,
    pub latency: LatencyModel,
    /// Upload bandwidth in bits per second.
    pub bandwidth: f64,
    pub revocation_count: usize,
    /// Hashes per signed set.
    pub sets_per_batch: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub mode: PropagationMode,
    pub uplink: UplinkModel,
    /// Simulated seconds after which a run is reported as not converged.
    pub time_cap: f64,
    /// Simulated CPU seconds to check one newly received set.
    pub verify_cost: f64,
    /// Fraction of non-issuer nodes that never send anything.
    pub silent_fraction: f64,
    /// Eager mode with a shared uplink: when the uplink frees up, drop a
    /// queued payload whose destination has already sent us that set.
    pub skip_known_holders: bool,
}

impl SimConfig {
    pub fn new(nodes: usize, degree: usize) -> Self {
        Self {
            nodes,
            degree,
            latency: LatencyModel::default(),
            bandwidth: 65e6,
            revocation_count: 340_000,
            sets_per_batch: 340_000,
            seed: 0,
            repetitions: 5,
            mode: PropagationMode::Eager,
            uplink: UplinkModel::PerLink,
            time_cap: 3600.0,
            verify_cost: 0.0,
            silent_fraction: 0.0,
            skip_known_holders: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.nodes < self.degree + 1 || (self.nodes * self.degree) % 2 == 1 {
            return Err(GraphError::Infeasible {
                nodes: self.nodes,
                degree: self.degree,
            }
            .into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(SimError::Bandwidth);
        }
        if self.revocation_count == 0 {
            return Err(SimError::NoRevocations);
        }
        if self.sets_per_batch == 0 {
            return Err(SimError::EmptyBatch);
        }
        if self.repetitions == 0 {
            return Err(SimError::NoRepetitions);
        }
        if !(0.0..1.0).contains(&self.silent_fraction) {
            return Err(SimError::SilentFraction(self.silent_fraction));
        }
        if !(self.verify_cost >= 0.0 && self.verify_cost.is_finite()) {
            return Err(SimError::VerifyCost);
        }
        if let PropagationMode::Periodic { interval, fanout } = self.mode {
            if !(interval > 0.0 && interval.is_finite()) {
                return Err(ConfigError::ZeroInterval.into());
            }
            if fanout == 0 {
                return Err(ConfigError::ZeroFanout.into());
            }
        }
        if let LatencyModel::Uniform { min, max } = self.latency {
            if !(min >= 0.0 && max >= min && max.is_finite()) {
                return Err(SimError::Latency);
            }
        }
        if let LatencyModel::Fixed(l) = self.latency {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(SimError::Latency);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("bandwidth must be positive and finite")]
    Bandwidth,
    #[error("latency bounds must be finite and non-negative")]
    Latency,
    #[error("revocation count must be positive")]
    NoRevocations,
    #[error("sets_per_batch must be positive")]
    EmptyBatch,
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error("verify cost must be finite and non-negative")]
    VerifyCost,
    #[error("silent fraction {0} outside [0, 1)")]
    SilentFraction(f64),
    #[error("no choice of silent nodes leaves the rest connected")]
    ResidualDisconnected,
    #[error("graph has {graph} nodes but the config says {config}")]
    GraphSize { graph: usize, config: usize },
    #[error(transparent)]
    Node(#[from] ConfigError),
    #[error("issuer failed to publish: {0}")]
    Publish(#[from] PublishError),
}

/// Seed for repetition `rep`, spread with SplitMix64.
pub fn derive_seed(seed: u64, rep: u64) -> u64 {
    let mut z = seed.wrapping_add(rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub seed: u64,
    /// Time the last honest node completed; `None` if the cap was hit.
    pub full_propagation_time: Option<f64>,
    /// Completion time per node; `None` for nodes that never completed.
    pub reception_times: Vec<Option<f64>>,
    pub messages_sent: u64,
    pub bytes_sent: u64,
    pub events_processed: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub runs: Vec<SimResult>,
}

impl SimSummary {
    /// Mean over repetitions; `None` if any run did not converge.
    pub fn mean_full_propagation_time(&self) -> Option<f64> {
        let times: Option<Vec<f64>> = self.runs.iter().map(|r| r.full_propagation_time).collect();
        times.map(|t| t.iter().sum::<f64>() / t.len() as f64)
    }

    pub fn mean_messages(&self) -> f64 {
        self.runs.iter().map(|r| r.messages_sent as f64).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_bytes(&self) -> f64 {
        self.runs.iter().map(|r| r.bytes_sent as f64).sum::<f64>() / self.runs.len() as f64
    }
}

/// One delivered message, as seen by an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub from: u32,
    pub to: u32,
    pub sent_at: f64,
    pub delivered_at: f64,
    pub bytes: u64,
    pub kind: &'static str,
}

enum EventKind {
    Deliver { from: u32, to: u32, sent_at: f64, msg: Message },
    Verified { from: u32, to: u32, set: Arc<SignedRevocationSet> },
    Tick { node: u32 },
    UplinkFree { node: u32 },
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap is a max-heap and we want the earliest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// The deterministic revocation hashes of a run.
pub fn revocation_hashes(count: usize, seed: u64) -> Vec<CredentialHash> {
    (0..count as u64)
        .map(|i| sha3_256_parts(&[b"sim-revocation", &seed.to_be_bytes(), &i.to_be_bytes()]))
        .collect()
}

/// A single run, prepared and ready to go.
pub struct Simulation {
    config: SimConfig,
    seed: u64,
    graph: WeightedGraph,
    nodes: Vec<Node<u32>>,
    silent: Vec<bool>,
    issuer: IssuerId,
    published: Vec<Arc<SignedRevocationSet>>,
    last_version: VersionLabel,
    queue: BinaryHeap<Event>,
    seq: u64,
    outbox: Vec<VecDeque<(f64, u32, Message)>>,
    uplink_busy: Vec<bool>,
    /// Per node, `(peer, version)` pairs the peer is known to hold.
    known: Vec<HashSet<(u32, u64)>>,
    /// Orders eager forwarding so no neighbour is systematically served last.
    forward_rng: ChaCha8Rng,
    cpu_free: Vec<f64>,
    complete: Vec<Option<f64>>,
    remaining: usize,
    messages: u64,
    bytes: u64,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("nodes", &self.nodes.len())
            .field("seed", &self.seed)
            .field("published", &self.published.len())
            .finish_non_exhaustive()
    }
}

impl Simulation {
    /// Random regular graph from `seed`, then [`Simulation::with_graph`].
    pub fn new(config: &SimConfig, seed: u64) -> Result<Self, SimError> {
        config.validate()?;
        let graph = generate_regular_graph(config.nodes, config.degree, seed, config.latency)?;
        Self::with_graph(config, graph, seed)
    }

    /// Set up nodes on a given graph. `config.nodes` must match; degree and
    /// latency settings are ignored.
    pub fn with_graph(config: &SimConfig, graph: WeightedGraph, seed: u64) -> Result<Self, SimError> {
        let n = graph.node_count();
        if n != config.nodes {
            return Err(SimError::GraphSize {
                graph: n,
                config: config.nodes,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let silent = choose_silent(&graph, config.silent_fraction, &mut rng)?;

        let mut key_seed = [0u8; 32];
        rng.fill(&mut key_seed);
        let issuer = Issuer::new(keygen(&key_seed).expect("32-byte seed"));
        let issuer_id = issuer.id();
        let mut tis = TrustedIssuerStorage::new();
        tis.trust(&issuer.keypair().public_key)
            .expect("generated keys are valid");

        let node_config = match config.mode {
            PropagationMode::Eager => NodeConfig {
                max_hashes_per_payload: config.sets_per_batch,
                ..NodeConfig::default()
            },
            PropagationMode::Periodic { interval, fanout } => NodeConfig {
                gossip_fanout: fanout,
                max_hashes_per_payload: config.sets_per_batch,
                ..NodeConfig::with_interval(Duration::from_secs_f64(interval))
            },
        };
        let arl_config = ArlConfig {
            lazy_filter: true,
            ..ArlConfig::default()
        };
        let verifier = Arc::new(MemoVerifier::new());
        let mut nodes = Vec::with_capacity(n);
        for u in 0..n as u32 {
            let node = Node::new(
                node_config.clone(),
                tis.clone(),
                arl_config.clone(),
                graph.neighbours(u).to_vec(),
                derive_seed(seed, u as u64 + 1_000_000),
            )?
            .with_verifier(verifier.clone());
            nodes.push(node);
        }

        let hashes = revocation_hashes(config.revocation_count, seed);
        nodes[0].set_issuer(issuer);
        let published = nodes[0].publish(0, &hashes)?;
        let last_version = published
            .last()
            .and_then(|s| s.version())
            .expect("at least one set published");

        let mut complete = vec![None; n];
        complete[0] = Some(0.0);
        let remaining = (1..n).filter(|&u| !silent[u]).count();
        Ok(Self {
            config: config.clone(),
            seed,
            graph,
            nodes,
            silent,
            issuer: issuer_id,
            published,
            last_version,
            queue: BinaryHeap::new(),
            seq: 0,
            outbox: vec![VecDeque::new(); n],
            uplink_busy: vec![false; n],
            known: vec![HashSet::new(); n],
            forward_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX - 1)),
            cpu_free: vec![0.0; n],
            complete,
            remaining,
            messages: 0,
            bytes: 0,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn nodes(&self) -> &[Node<u32>] {
        &self.nodes
    }

    pub fn silent(&self) -> &[bool] {
        &self.silent
    }

    pub fn issuer_id(&self) -> IssuerId {
        self.issuer
    }

    /// Sets published by the issuer at t = 0.
    pub fn published(&self) -> &[Arc<SignedRevocationSet>] {
        &self.published
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn send(&mut self, now: f64, from: u32, to: u32, msg: Message) {
        match self.config.uplink {
            UplinkModel::Shared => {
                self.outbox[from as usize].push_back((now, to, msg));
                if !self.uplink_busy[from as usize] {
                    self.dispatch(now, from);
                }
            }
            UplinkModel::PerLink => self.transmit(now, now, from, to, msg),
        }
    }

    fn tracks_holders(&self) -> bool {
        self.config.skip_known_holders
            && self.config.mode == PropagationMode::Eager
            && self.config.uplink == UplinkModel::Shared
    }

    /// Start the next useful transfer queued at `from`.
    fn dispatch(&mut self, now: f64, from: u32) {
        let skip = self.tracks_holders();
        while let Some((queued_at, to, msg)) = self.outbox[from as usize].pop_front() {
            if skip {
                if let Message::Payload(set) = &msg {
                    let version = set.set.version;
                    if self.known[from as usize].contains(&(to, version)) {
                        continue;
                    }
                }
            }
            self.uplink_busy[from as usize] = true;
            self.transmit(queued_at, now, from, to, msg);
            return;
        }
        self.uplink_busy[from as usize] = false;
    }

    fn transmit(&mut self, queued_at: f64, now: f64, from: u32, to: u32, msg: Message) {
        let bytes = msg.encoded_len() as u64;
        let latency = self.graph.latency(from, to).expect("messages follow edges");
        let done = now + transfer_time(bytes, self.config.bandwidth);
        self.messages += 1;
        self.bytes += bytes;
        if self.config.uplink == UplinkModel::Shared {
            self.push(done, EventKind::UplinkFree { node: from });
        }
        self.push(
            done + latency,
            EventKind::Deliver {
                from,
                to,
                sent_at: queued_at,
                msg,
            },
        );
    }

    fn holds_all(&self, u: u32) -> bool {
        self.nodes[u as usize].arl().highest_contiguous(&self.issuer) == Some(self.last_version)
    }

    fn note_progress(&mut self, u: u32, now: f64) {
        if self.complete[u as usize].is_none() && self.holds_all(u) {
            self.complete[u as usize] = Some(now);
            if !self.silent[u as usize] {
                self.remaining -= 1;
            }
        }
    }

    fn start(&mut self) {
        match self.config.mode {
            PropagationMode::Eager => {
                let sets = self.published.clone();
                let mut neighbours = self.graph.neighbours(0).to_vec();
                neighbours.shuffle(&mut self.forward_rng);
                for set in sets {
                    for &v in &neighbours {
                        self.send(0.0, 0, v, Message::Payload(set.clone()));
                    }
                }
            }
            PropagationMode::Periodic { interval, .. } => {
                let ads = self.nodes[0].gossip_tick(Duration::ZERO);
                for (v, ad) in ads {
                    self.send(0.0, 0, v, Message::Advertisement(ad));
                }
                self.push(interval, EventKind::Tick { node: 0 });
                let mut phase = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, u64::MAX));
                for u in 1..self.nodes.len() as u32 {
                    if !self.silent[u as usize] {
                        let at = phase.gen_range(0.0..interval);
                        self.push(at, EventKind::Tick { node: u });
                    }
                }
            }
        }
    }

    fn on_payload(&mut self, now: f64, from: u32, to: u32, set: Arc<SignedRevocationSet>) {
        let node = &mut self.nodes[to as usize];
        let reception = node.receive_revocations(set.clone(), Duration::from_secs_f64(now));
        if reception.outcome != ReceiveOutcome::Stored {
            return;
        }
        self.note_progress(to, now);
        if self.silent[to as usize] {
            return;
        }
        match self.config.mode {
            PropagationMode::Eager => {
                let mut neighbours = self.graph.neighbours(to).to_vec();
                neighbours.shuffle(&mut self.forward_rng);
                for v in neighbours.into_iter().filter(|&v| v != from) {
                    self.send(now, to, v, Message::Payload(set.clone()));
                }
            }
            PropagationMode::Periodic { .. } => {
                for (v, ad) in reception.advertisements {
                    self.send(now, to, v, Message::Advertisement(ad));
                }
            }
        }
    }

    fn needs_check(&self, to: u32, set: &SignedRevocationSet) -> bool {
        set.version()
            .is_some_and(|v| !self.nodes[to as usize].arl().holds(&set.issuer_id(), v))
    }

    fn step(&mut self, event: Event, observer: &mut dyn FnMut(&Delivery)) {
        let now = event.time;
        match event.kind {
            EventKind::Tick { node } => {
                let ads = self.nodes[node as usize].gossip_tick(Duration::from_secs_f64(now));
                for (v, ad) in ads {
                    self.send(now, node, v, Message::Advertisement(ad));
                }
                if let PropagationMode::Periodic { interval, .. } = self.config.mode {
                    self.push(now + interval, EventKind::Tick { node });
                }
            }
            EventKind::Verified { from, to, set } => self.on_payload(now, from, to, set),
            EventKind::UplinkFree { node } => self.dispatch(now, node),
            EventKind::Deliver {
                from,
                to,
                sent_at,
                msg,
            } => {
                observer(&Delivery {
                    from,
                    to,
                    sent_at,
                    delivered_at: now,
                    bytes: msg.encoded_len() as u64,
                    kind: msg.kind(),
                });
                match msg {
                    Message::Payload(set) => {
                        if self.tracks_holders() {
                            self.known[to as usize].insert((from, set.set.version));
                        }
                        if self.config.verify_cost > 0.0 && self.needs_check(to, &set) {
                            let cpu = &mut self.cpu_free[to as usize];
                            *cpu = cpu.max(now) + self.config.verify_cost;
                            let at = *cpu;
                            self.push(at, EventKind::Verified { from, to, set });
                        } else {
                            self.on_payload(now, from, to, set);
                        }
                    }
                    other => {
                        let replies = self.nodes[to as usize].handle_message(
                            from,
                            other,
                            Duration::from_secs_f64(now),
                        );
                        if !self.silent[to as usize] {
                            for (v, reply) in replies {
                                self.send(now, to, v, reply);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Run to convergence or the time cap.
    pub fn run(&mut self) -> SimResult {
        self.run_observed(&mut |_| {})
    }

    /// As [`Simulation::run`], reporting every delivery to `observer`.
    pub fn run_observed(&mut self, observer: &mut dyn FnMut(&Delivery)) -> SimResult {
        self.start();
        let mut events = 0u64;
        while self.remaining > 0 {
            let Some(event) = self.queue.pop() else { break };
            if event.time > self.config.time_cap {
                break;
            }
            events += 1;
            self.step(event, observer);
        }
        let converged = self.remaining == 0;
        let full = converged.then(|| {
            self.complete
                .iter()
                .zip(&self.silent)
                .filter(|(_, &s)| !s)
                .filter_map(|(t, _)| *t)
                .fold(0.0, f64::max)
        });
        self.queue.clear();
        SimResult {
            seed: self.seed,
            full_propagation_time: full,
            reception_times: self.complete.clone(),
            messages_sent: self.messages,
            bytes_sent: self.bytes,
            events_processed: events,
            converged,
        }
    }
}

fn choose_silent(graph: &WeightedGraph, fraction: f64, rng: &mut ChaCha8Rng) -> Result<Vec<bool>, SimError> {
    let n = graph.node_count();
    let count = ((n - 1) as f64 * fraction).floor() as usize;
    if count == 0 {
        return Ok(vec![false; n]);
    }
    for _ in 0..100 {
        let mut silent = vec![false; n];
        for i in sample(rng, n - 1, count) {
            silent[i + 1] = true;
        }
        if graph.is_connected_without(&silent) {
            return Ok(silent);
        }
    }
    Err(SimError::ResidualDisconnected)
}

/// One repetition with seed `derive_seed(config.seed, rep)`.
pub fn run_once(config: &SimConfig, rep: usize) -> Result<SimResult, SimError> {
    let seed = derive_seed(config.seed, rep as u64);
    let mut sim = Simulation::new(config, seed)?;
    Ok(sim.run())
}

/// All repetitions, in order.
pub fn run_simulation(config: &SimConfig) -> Result<SimSummary, SimError> {
    config.validate()?;
    let runs = (0..config.repetitions)
        .map(|rep| run_once(config, rep))
        .collect::<Result<_, _>>()?;
    Ok(SimSummary { runs })
}
