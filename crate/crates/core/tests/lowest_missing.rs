use std::collections::BTreeSet;
use std::sync::Arc;

use revo_core::crypto::{keygen, sha3_256};
use revo_core::{ArlConfig, AttestationRevocationList, BloomParams, Issuer, SignedRevocationSet};

/// Smallest positive integer not in `held`, by plain scanning.
fn scan_oracle(held: &BTreeSet<u64>) -> u64 {
    (1..).find(|v| !held.contains(v)).unwrap()
}

fn twelve_sets() -> Vec<Arc<SignedRevocationSet>> {
    let mut issuer = Issuer::new(keygen(&[3; 32]).unwrap());
    (0..12u32)
        .map(|i| Arc::new(issuer.issue(0, &[sha3_256(&i.to_be_bytes())]).unwrap()))
        .collect()
}

#[test]
fn matches_scan_on_every_subset_of_twelve() {
    let sets = twelve_sets();
    let issuer = sets[0].issuer_id();
    let config = ArlConfig {
        bloom: BloomParams::for_capacity(64, 1e-6),
        ..ArlConfig::default()
    };
    for mask in 0u32..(1 << 12) {
        let mut arl = AttestationRevocationList::new(config.clone());
        let mut held = BTreeSet::new();
        for (bit, set) in sets.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                arl.store(set.clone());
                held.insert(bit as u64 + 1);
            }
        }
        let expected = scan_oracle(&held);
        assert_eq!(arl.lowest_missing_version(&issuer).get(), expected, "mask {mask:012b}");
        let contiguous = arl.highest_contiguous(&issuer).map(|v| v.get());
        assert_eq!(contiguous, (expected > 1).then_some(expected - 1));
    }
}
