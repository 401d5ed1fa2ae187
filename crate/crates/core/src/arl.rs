//! Attestation Revocation List: every revocation set a client has accepted,
//! keyed by `(issuer, version)`, with a Bloom filter in front of the exact
//! lookup.
//!
//! Two modes exist. In exact mode the signed sets are retained and a Bloom
//! hit is confirmed by a definitive search. In Bloom-only mode only the filter
//! and the version bookkeeping are kept, so answers are "probably revoked" at
//! best and the node cannot serve sets to others.
//!
//! Consistency: mutation goes through `&mut self` only, and every stored set
//! is inserted into the filter before `store` returns (or, when the filter is
//! lazy, the filter is built from all stored sets on first read). A reader
//! holding `&self` therefore never sees a set whose hashes are missing from
//! the filter.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, OnceLock};

use log::warn;

use crate::bloom::{BloomFilter, BloomParams};
use crate::revocation::{CredentialHash, IssuerId, SignedRevocationSet, VersionLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArlMode {
    #[default]
    Exact,
    BloomOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArlConfig {
    pub mode: ArlMode,
    pub bloom: BloomParams,
    /// Build the filter on first query instead of on every store. Only
    /// honoured in exact mode.
    pub lazy_filter: bool,
}

impl Default for ArlConfig {
    fn default() -> Self {
        Self {
            mode: ArlMode::Exact,
            bloom: BloomParams::default(),
            lazy_filter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Issuers that revoked the credential, ascending.
    Revoked(Vec<IssuerId>),
    NotRevoked,
    /// Bloom-only hit; may be a false positive.
    ProbablyRevoked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreOutcome {
    Stored,
    Duplicate,
    /// A different payload already occupies this `(issuer, version)`.
    Invalid,
}

#[derive(Debug, Clone)]
enum Slot {
    Stored(Arc<SignedRevocationSet>),
    /// Bloom-only: the hashes went into the filter, the set was dropped.
    Seen,
    /// Dropped by pruning; still counts as held so it is not re-fetched.
    Pruned,
}

#[derive(Debug, Clone, Default)]
struct IssuerEntry {
    slots: BTreeMap<u64, Slot>,
    /// Highest v such that 1..=v are all present.
    contiguous: u64,
}

impl IssuerEntry {
    fn advance(&mut self) {
        while self.slots.contains_key(&(self.contiguous + 1)) {
            self.contiguous += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlStats {
    pub issuers: usize,
    pub sets: usize,
    pub hashes: u64,
    pub filter_bits: u64,
    pub filter_occupancy: f64,
}

#[derive(Debug)]
pub struct AttestationRevocationList {
    config: ArlConfig,
    issuers: HashMap<IssuerId, IssuerEntry>,
    filter: OnceLock<BloomFilter>,
    stored_sets: usize,
    stored_hashes: u64,
}

impl Default for AttestationRevocationList {
    fn default() -> Self {
        Self::new(ArlConfig::default())
    }
}

impl AttestationRevocationList {
    pub fn new(config: ArlConfig) -> Self {
        let arl = Self {
            config,
            issuers: HashMap::new(),
            filter: OnceLock::new(),
            stored_sets: 0,
            stored_hashes: 0,
        };
        if !arl.is_lazy() {
            let _ = arl.filter.set(BloomFilter::with_params(&arl.config.bloom));
        }
        arl
    }

    pub fn mode(&self) -> ArlMode {
        self.config.mode
    }

    fn is_lazy(&self) -> bool {
        self.config.lazy_filter && self.config.mode == ArlMode::Exact
    }

    /// Caller is responsible for trust and signature checks.
    pub fn store(&mut self, set: Arc<SignedRevocationSet>) -> StoreOutcome {
        let Some(version) = set.version() else {
            return StoreOutcome::Invalid;
        };
        let issuer = set.issuer_id();
        let entry = self.issuers.entry(issuer).or_default();
        if let Some(existing) = entry.slots.get(&version.get()) {
            return match existing {
                Slot::Stored(old) if Arc::ptr_eq(old, &set) || **old == *set => {
                    StoreOutcome::Duplicate
                }
                Slot::Stored(_) => {
                    warn!("conflicting payload for {issuer:?} v{version}; keeping the first");
                    StoreOutcome::Invalid
                }
                Slot::Seen | Slot::Pruned => StoreOutcome::Duplicate,
            };
        }
        let slot = match self.config.mode {
            ArlMode::Exact => Slot::Stored(set.clone()),
            ArlMode::BloomOnly => Slot::Seen,
        };
        entry.slots.insert(version.get(), slot);
        entry.advance();
        self.stored_sets += 1;
        self.stored_hashes += set.set.hashes.len() as u64;

        if let Some(filter) = self.filter.get_mut() {
            for h in &set.set.hashes {
                filter.insert(h);
            }
        }
        self.maybe_grow();
        StoreOutcome::Stored
    }

    /// Rebuild at double capacity once the filter holds more than it was
    /// sized for. Bloom-only lists cannot rebuild and just degrade.
    fn maybe_grow(&mut self) {
        if self.config.mode != ArlMode::Exact {
            return;
        }
        let over = self
            .filter
            .get()
            .is_some_and(|f| f.inserted_count() > self.current_params().capacity);
        if over {
            let mut factor = 1;
            while self.config.bloom.capacity * factor < self.stored_hashes {
                factor *= 2;
            }
            self.config.bloom = self.config.bloom.scaled(factor);
            self.rebuild_filter();
        }
    }

    fn current_params(&self) -> BloomParams {
        self.config.bloom
    }

    fn build_filter(&self) -> BloomFilter {
        let mut params = self.config.bloom;
        let mut factor = 1;
        while params.capacity * factor < self.stored_hashes {
            factor *= 2;
        }
        params = params.scaled(factor);
        let mut filter = BloomFilter::with_params(&params);
        for set in self.stored() {
            for h in &set.set.hashes {
                filter.insert(h);
            }
        }
        filter
    }

    fn rebuild_filter(&mut self) {
        self.filter = OnceLock::new();
        if !self.is_lazy() {
            let f = self.build_filter();
            let _ = self.filter.set(f);
        }
    }

    pub fn filter(&self) -> &BloomFilter {
        self.filter.get_or_init(|| self.build_filter())
    }

    /// Iterate retained sets. Empty in Bloom-only mode.
    pub fn stored(&self) -> impl Iterator<Item = &Arc<SignedRevocationSet>> {
        self.issuers.values().flat_map(|e| {
            e.slots.values().filter_map(|s| match s {
                Slot::Stored(set) => Some(set),
                _ => None,
            })
        })
    }

    pub fn get(&self, issuer: &IssuerId, version: VersionLabel) -> Option<&Arc<SignedRevocationSet>> {
        match self.issuers.get(issuer)?.slots.get(&version.get())? {
            Slot::Stored(set) => Some(set),
            _ => None,
        }
    }

    pub fn holds(&self, issuer: &IssuerId, version: VersionLabel) -> bool {
        self.issuers
            .get(issuer)
            .is_some_and(|e| e.slots.contains_key(&version.get()))
    }

    /// Versions present for `issuer`, ascending.
    pub fn versions(&self, issuer: &IssuerId) -> Vec<u64> {
        self.issuers
            .get(issuer)
            .map(|e| e.slots.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Retained sets of `issuer` with version >= `from`, ascending.
    pub fn sets_from(&self, issuer: &IssuerId, from: VersionLabel) -> Vec<Arc<SignedRevocationSet>> {
        let Some(entry) = self.issuers.get(issuer) else {
            return Vec::new();
        };
        entry
            .slots
            .range(from.get()..)
            .filter_map(|(_, s)| match s {
                Slot::Stored(set) => Some(set.clone()),
                _ => None,
            })
            .collect()
    }

    /// Smallest v >= 1 not held for `issuer`.
    pub fn lowest_missing_version(&self, issuer: &IssuerId) -> VersionLabel {
        let contiguous = self.issuers.get(issuer).map_or(0, |e| e.contiguous);
        VersionLabel::new(contiguous + 1).expect("contiguous + 1 >= 1")
    }

    /// Highest v with 1..=v all held, if any.
    pub fn highest_contiguous(&self, issuer: &IssuerId) -> Option<VersionLabel> {
        self.issuers
            .get(issuer)
            .and_then(|e| VersionLabel::new(e.contiguous))
    }

    /// Issuers with at least one version held, ascending.
    pub fn issuers(&self) -> BTreeSet<IssuerId> {
        self.issuers
            .iter()
            .filter(|(_, e)| !e.slots.is_empty())
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn verify_credential(&self, credential: &CredentialHash) -> Verdict {
        let hit = self.filter().contains(credential);
        match (self.config.mode, hit) {
            (_, false) => Verdict::NotRevoked,
            (ArlMode::BloomOnly, true) => Verdict::ProbablyRevoked,
            (ArlMode::Exact, true) => {
                let issuers: BTreeSet<IssuerId> = self
                    .stored()
                    .filter(|s| s.set.contains(credential))
                    .map(|s| s.issuer_id())
                    .collect();
                if issuers.is_empty() {
                    Verdict::NotRevoked
                } else {
                    Verdict::Revoked(issuers.into_iter().collect())
                }
            }
        }
    }

    /// Drop retained sets published before `now - horizon_secs` and rebuild
    /// the filter. Returns the number of sets removed. No-op in Bloom-only
    /// mode, where hashes cannot be taken back out of the filter.
    pub fn prune(&mut self, horizon_secs: u64, now: u64) -> usize {
        if self.config.mode == ArlMode::BloomOnly {
            return 0;
        }
        let cutoff = now.saturating_sub(horizon_secs);
        let mut removed = 0;
        let mut removed_hashes = 0u64;
        for entry in self.issuers.values_mut() {
            for slot in entry.slots.values_mut() {
                if let Slot::Stored(set) = slot {
                    if set.set.published_at < cutoff {
                        removed_hashes += set.set.hashes.len() as u64;
                        *slot = Slot::Pruned;
                        removed += 1;
                    }
                }
            }
        }
        if removed > 0 {
            self.stored_sets -= removed;
            self.stored_hashes -= removed_hashes;
            self.rebuild_filter();
        }
        removed
    }

    pub fn set_count(&self) -> usize {
        self.stored_sets
    }

    pub fn hash_count(&self) -> u64 {
        self.stored_hashes
    }

    pub fn stats(&self) -> ArlStats {
        let f = self.filter();
        ArlStats {
            issuers: self.issuers().len(),
            sets: self.stored_sets,
            hashes: self.stored_hashes,
            filter_bits: f.bit_len(),
            filter_occupancy: f.occupancy(),
        }
    }

    /// True if the filter reports every retained hash. Test hook for the
    /// no-false-negative invariant.
    pub fn filter_covers_store(&self) -> bool {
        let f = self.filter();
        self.stored().all(|s| s.set.hashes.iter().all(|h| f.contains(h)))
    }
}
