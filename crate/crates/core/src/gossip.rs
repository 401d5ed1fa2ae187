//! The per-node gossip state machine.
//!
//! A node periodically advertises, to a few random neighbours, the highest
//! contiguous version it holds for each trusted issuer. A neighbour that is
//! missing something answers with the lowest version it lacks; the advertiser
//! then sends every set from that version on. Received sets are accepted only
//! from trusted issuers and only with a valid signature.
//!
//! The state machine does no I/O. Every handler takes the current time and
//! returns the messages to send; a transport (the simulator or the UDP
//! runner) delivers them and feeds replies back in one at a time.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arl::{ArlConfig, ArlMode, AttestationRevocationList, StoreOutcome};
use crate::revocation::{
    validate_signed_set, CredentialHash, InvalidReason, Issuer, IssuerId, RevocationError,
    SignedRevocationSet, VersionLabel,
};
use crate::tis::TrustedIssuerStorage;
use crate::wire::{Advertisement, Message, UpdateRequest};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("gossip interval must be positive")]
    ZeroInterval,
    #[error("gossip fanout must be at least 1")]
    ZeroFanout,
    #[error("max hashes per payload must be at least 1")]
    ZeroPayload,
    #[error("advertisement entry cap must be at least 1")]
    ZeroAdvertisementCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    /// Time between advertisement rounds.
    pub gossip_interval: Duration,
    /// Neighbours advertised to per round.
    pub gossip_fanout: usize,
    /// How long after advertising to a peer its update request is honoured.
    pub advertisement_ttl: Duration,
    /// Issuers split batches into sets of at most this many hashes.
    pub max_hashes_per_payload: usize,
    /// Entries per advertisement; larger registers are rotated through.
    pub max_advertisement_entries: usize,
    pub mode: ArlMode,
    /// Advertise to every neighbour as soon as a new set is stored.
    pub eager_push: bool,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self::with_interval(Duration::from_millis(100))
    }
}

impl NodeConfig {
    /// Defaults, with the advertisement TTL tied to five intervals.
    pub fn with_interval(gossip_interval: Duration) -> Self {
        Self {
            gossip_interval,
            gossip_fanout: 5,
            advertisement_ttl: gossip_interval * 5,
            max_hashes_per_payload: 1000,
            max_advertisement_entries: 1000,
            mode: ArlMode::Exact,
            eager_push: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.gossip_interval.is_zero() {
            return Err(ConfigError::ZeroInterval);
        }
        if self.gossip_fanout == 0 {
            return Err(ConfigError::ZeroFanout);
        }
        if self.max_hashes_per_payload == 0 {
            return Err(ConfigError::ZeroPayload);
        }
        if self.max_advertisement_entries == 0 {
            return Err(ConfigError::ZeroAdvertisementCap);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PeerRecord {
    pub last_advertised_to: Duration,
    pub last_advertisement: Arc<Advertisement>,
}

/// Signature and canonical-form check applied to every received set.
pub trait SetVerifier: Send + Sync {
    fn check(&self, set: &Arc<SignedRevocationSet>) -> Result<(), InvalidReason>;
}

/// Verifies every set in full.
#[derive(Debug, Default, Clone, Copy)]
pub struct StrictVerifier;

impl SetVerifier for StrictVerifier {
    fn check(&self, set: &Arc<SignedRevocationSet>) -> Result<(), InvalidReason> {
        validate_signed_set(set)
    }
}

/// Verifies each distinct allocation once and remembers the answer.
///
/// Keyed by `Arc` address; the cache keeps every checked `Arc` alive so an
/// address is never reused for different content. Meant for simulations
/// where thousands of nodes receive the very same published sets.
type Checked = (Arc<SignedRevocationSet>, Result<(), InvalidReason>);

#[derive(Default)]
pub struct MemoVerifier {
    seen: Mutex<HashMap<usize, Checked>>,
}

impl MemoVerifier {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SetVerifier for MemoVerifier {
    fn check(&self, set: &Arc<SignedRevocationSet>) -> Result<(), InvalidReason> {
        let key = Arc::as_ptr(set) as usize;
        let mut seen = self.seen.lock().expect("verifier cache poisoned");
        seen.entry(key)
            .or_insert_with(|| (set.clone(), validate_signed_set(set)))
            .1
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Refusal {
    #[error("no recent advertisement to this peer")]
    Unsolicited,
    #[error("bloom-only nodes do not serve revocations")]
    BloomOnly,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    #[error("issuer is not trusted")]
    Untrusted,
    #[error("invalid set: {0}")]
    Invalid(InvalidReason),
    #[error("conflicts with a stored set of the same version")]
    Conflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiveOutcome {
    Stored,
    Duplicate,
    Rejected(RejectReason),
}

#[derive(Debug, Clone)]
pub struct Reception<P> {
    pub outcome: ReceiveOutcome,
    /// Eager-push advertisements triggered by a newly stored set.
    pub advertisements: Vec<(P, Arc<Advertisement>)>,
}

pub struct Node<P> {
    config: NodeConfig,
    issuer: Option<Issuer>,
    tis: TrustedIssuerStorage,
    arl: AttestationRevocationList,
    neighbours: Vec<P>,
    peers: HashMap<P, PeerRecord>,
    rng: ChaCha8Rng,
    verifier: Arc<dyn SetVerifier>,
    ad_cursor: usize,
}

impl<P> std::fmt::Debug for Node<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node")
            .field("neighbours", &self.neighbours.len())
            .field("sets", &self.arl.set_count())
            .finish_non_exhaustive()
    }
}

impl<P: Copy + Eq + Hash> Node<P> {
    pub fn new(
        config: NodeConfig,
        tis: TrustedIssuerStorage,
        arl_config: ArlConfig,
        neighbours: Vec<P>,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let arl_config = ArlConfig {
            mode: config.mode,
            ..arl_config
        };
        Ok(Self {
            config,
            issuer: None,
            tis,
            arl: AttestationRevocationList::new(arl_config),
            neighbours,
            peers: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            verifier: Arc::new(StrictVerifier),
            ad_cursor: 0,
        })
    }

    pub fn with_verifier(mut self, verifier: Arc<dyn SetVerifier>) -> Self {
        self.verifier = verifier;
        self
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn arl(&self) -> &AttestationRevocationList {
        &self.arl
    }

    pub fn arl_mut(&mut self) -> &mut AttestationRevocationList {
        &mut self.arl
    }

    pub fn tis(&self) -> &TrustedIssuerStorage {
        &self.tis
    }

    pub fn tis_mut(&mut self) -> &mut TrustedIssuerStorage {
        &mut self.tis
    }

    pub fn neighbours(&self) -> &[P] {
        &self.neighbours
    }

    pub fn set_neighbours(&mut self, neighbours: Vec<P>) {
        self.neighbours = neighbours;
    }

    pub fn peer(&self, peer: &P) -> Option<&PeerRecord> {
        self.peers.get(peer)
    }

    /// Make this node an issuer. Its own key becomes trusted.
    pub fn set_issuer(&mut self, issuer: Issuer) {
        // Ed25519 keys produced by keygen are always well formed.
        let _ = self.tis.trust(&issuer.keypair().public_key);
        self.issuer = Some(issuer);
    }

    pub fn issuer(&self) -> Option<&Issuer> {
        self.issuer.as_ref()
    }

    /// Issue `hashes` as consecutive sets of at most
    /// `max_hashes_per_payload` and store them locally.
    pub fn publish(
        &mut self,
        published_at: u64,
        hashes: &[CredentialHash],
    ) -> Result<Vec<Arc<SignedRevocationSet>>, PublishError> {
        let batch = self.config.max_hashes_per_payload;
        let issuer = self.issuer.as_mut().ok_or(PublishError::NotAnIssuer)?;
        let sets = issuer.issue_batches(published_at, hashes, batch)?;
        for s in &sets {
            self.arl.store(s.clone());
        }
        Ok(sets)
    }

    /// Re-load a set from persistent storage. Checks the signature but not
    /// trust: sets kept from since-untrusted issuers stay stored.
    pub fn restore(&mut self, set: Arc<SignedRevocationSet>) -> ReceiveOutcome {
        if let Err(reason) = self.verifier.check(&set) {
            return ReceiveOutcome::Rejected(RejectReason::Invalid(reason));
        }
        match self.arl.store(set) {
            StoreOutcome::Stored => ReceiveOutcome::Stored,
            StoreOutcome::Duplicate => ReceiveOutcome::Duplicate,
            StoreOutcome::Invalid => ReceiveOutcome::Rejected(RejectReason::Conflict),
        }
    }

    /// Trusted issuers with at least one contiguous version, capped at
    /// `max_advertisement_entries` and rotated across calls when longer.
    /// Bloom-only nodes advertise nothing.
    pub fn build_advertisement(&mut self) -> Advertisement {
        if self.config.mode == ArlMode::BloomOnly {
            return Advertisement::default();
        }
        let eligible: Vec<(IssuerId, VersionLabel)> = self
            .tis
            .issuers()
            .filter_map(|(id, _)| self.arl.highest_contiguous(id).map(|v| (*id, v)))
            .collect();
        let cap = self.config.max_advertisement_entries;
        if eligible.len() <= cap {
            return Advertisement { entries: eligible };
        }
        let start = self.ad_cursor % eligible.len();
        self.ad_cursor = (start + cap) % eligible.len();
        let entries = eligible.iter().cycle().skip(start).take(cap).copied().collect();
        Advertisement { entries }
    }

    fn advertise_to(&mut self, targets: Vec<P>, now: Duration) -> Vec<(P, Arc<Advertisement>)> {
        let ad = self.build_advertisement();
        if ad.is_empty() {
            return Vec::new();
        }
        let ad = Arc::new(ad);
        for peer in &targets {
            let record = self.peers.entry(*peer).or_insert_with(|| PeerRecord {
                last_advertised_to: now,
                last_advertisement: ad.clone(),
            });
            record.last_advertised_to = record.last_advertised_to.max(now);
            record.last_advertisement = ad.clone();
        }
        targets.into_iter().map(|p| (p, ad.clone())).collect()
    }

    /// One advertisement round: up to `gossip_fanout` distinct neighbours
    /// drawn uniformly without replacement.
    pub fn gossip_tick(&mut self, now: Duration) -> Vec<(P, Arc<Advertisement>)> {
        let targets: Vec<P> = self
            .neighbours
            .choose_multiple(&mut self.rng, self.config.gossip_fanout)
            .copied()
            .collect();
        self.advertise_to(targets, now)
    }

    /// Advertise to every neighbour.
    pub fn advertise_all(&mut self, now: Duration) -> Vec<(P, Arc<Advertisement>)> {
        let targets = self.neighbours.clone();
        self.advertise_to(targets, now)
    }

    /// Ask for everything from the lowest missing version of each trusted
    /// issuer the advertiser is ahead on.
    pub fn handle_advertisement(&self, from: P, ad: &Advertisement) -> Option<UpdateRequest> {
        let _ = from;
        let entries: Vec<_> = ad
            .entries
            .iter()
            .filter(|(issuer, _)| self.tis.contains(issuer))
            .filter_map(|(issuer, advertised)| {
                let missing = self.arl.lowest_missing_version(issuer);
                (missing <= *advertised).then_some((*issuer, missing))
            })
            .collect();
        (!entries.is_empty()).then_some(UpdateRequest { entries })
    }

    /// Serve a request from a peer advertised to within the TTL. Returns
    /// every stored set of each requested (trusted) issuer from the
    /// requested version on.
    pub fn handle_update_request(
        &self,
        from: P,
        req: &UpdateRequest,
        now: Duration,
    ) -> Result<Vec<Arc<SignedRevocationSet>>, Refusal> {
        if self.config.mode == ArlMode::BloomOnly {
            return Err(Refusal::BloomOnly);
        }
        let recent = self
            .peers
            .get(&from)
            .is_some_and(|r| now.saturating_sub(r.last_advertised_to) <= self.config.advertisement_ttl);
        if !recent {
            return Err(Refusal::Unsolicited);
        }
        Ok(req
            .entries
            .iter()
            .filter(|(issuer, _)| self.tis.contains(issuer))
            .flat_map(|(issuer, from_version)| self.arl.sets_from(issuer, *from_version))
            .collect())
    }

    pub fn receive_revocations(
        &mut self,
        payload: Arc<SignedRevocationSet>,
        now: Duration,
    ) -> Reception<P> {
        let outcome = self.accept(payload);
        let advertisements = if outcome == ReceiveOutcome::Stored && self.config.eager_push {
            self.advertise_all(now)
        } else {
            Vec::new()
        };
        Reception {
            outcome,
            advertisements,
        }
    }

    fn accept(&mut self, payload: Arc<SignedRevocationSet>) -> ReceiveOutcome {
        let issuer = payload.issuer_id();
        if !self.tis.contains(&issuer) {
            return ReceiveOutcome::Rejected(RejectReason::Untrusted);
        }
        // An identical copy of a stored set needs no second signature check.
        if let Some(version) = payload.version() {
            match self.arl.get(&issuer, version) {
                Some(stored) if Arc::ptr_eq(stored, &payload) || **stored == *payload => {
                    return ReceiveOutcome::Duplicate;
                }
                _ => {}
            }
        }
        if let Err(reason) = self.verifier.check(&payload) {
            return ReceiveOutcome::Rejected(RejectReason::Invalid(reason));
        }
        match self.arl.store(payload) {
            StoreOutcome::Stored => ReceiveOutcome::Stored,
            StoreOutcome::Duplicate => ReceiveOutcome::Duplicate,
            StoreOutcome::Invalid => ReceiveOutcome::Rejected(RejectReason::Conflict),
        }
    }

    /// Dispatch one inbound message and return what to send in reply.
    pub fn handle_message(&mut self, from: P, msg: Message, now: Duration) -> Vec<(P, Message)> {
        match msg {
            Message::Advertisement(ad) => self
                .handle_advertisement(from, &ad)
                .map(|req| vec![(from, Message::UpdateRequest(req))])
                .unwrap_or_default(),
            Message::UpdateRequest(req) => match self.handle_update_request(from, &req, now) {
                Ok(sets) => sets.into_iter().map(|s| (from, Message::Payload(s))).collect(),
                Err(refusal) => {
                    debug!("refused update request: {refusal}");
                    Vec::new()
                }
            },
            Message::Payload(set) => {
                let reception = self.receive_revocations(set, now);
                if let ReceiveOutcome::Rejected(reason) = reception.outcome {
                    debug!("rejected payload: {reason}");
                }
                reception
                    .advertisements
                    .into_iter()
                    .map(|(p, ad)| (p, Message::Advertisement(ad)))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum PublishError {
    #[error("node has no issuer identity")]
    NotAnIssuer,
    #[error(transparent)]
    Revocation(#[from] RevocationError),
}
