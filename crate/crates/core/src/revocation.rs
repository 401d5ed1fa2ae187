//! Versioned, signed revocation sets.
//!
//! An issuer revokes credentials by publishing their hashes in batches. Each
//! batch carries a per-issuer version label (1, 2, 3, ... with no gaps) and a
//! publication timestamp, and is signed over its canonical encoding:
//!
//! ```text
//! "SSI-REV-V1" | u16 pk_len | pk | u64 version | u64 published_at | u32 count | count x 32-byte hash
//! ```
//!
//! All integers are big-endian and hashes are strictly ascending.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::crypto::{self, sha3_256, CryptoError, Digest256, KeyPair, Signature};

/// Domain separation tag prefixed to every signing preimage.
pub const DOMAIN_TAG: &[u8; 10] = b"SSI-REV-V1";

pub type CredentialHash = Digest256;

/// SHA3-256 digest of an issuer's public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IssuerId(pub Digest256);

impl IssuerId {
    pub fn from_public_key(public_key: &[u8]) -> Self {
        Self(sha3_256(public_key))
    }

    pub fn digest(&self) -> &Digest256 {
        &self.0
    }
}

impl fmt::Debug for IssuerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IssuerId({})", &self.0.to_hex()[..16])
    }
}

impl fmt::Display for IssuerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Per-issuer batch number. Always at least 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VersionLabel(u64);

impl VersionLabel {
    pub const FIRST: VersionLabel = VersionLabel(1);

    pub fn new(value: u64) -> Option<Self> {
        (value >= 1).then_some(Self(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn next(self) -> Self {
        Self(self.0 + 1)
    }
}

impl fmt::Display for VersionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The unsigned content of one published batch.
///
/// Fields are public so decoded (possibly hostile) input can be represented;
/// [`RevocationSet::canonical`] is the constructor for honest sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RevocationSet {
    pub issuer_public_key: Vec<u8>,
    pub version: u64,
    pub published_at: u64,
    pub hashes: Vec<CredentialHash>,
}

impl RevocationSet {
    /// Build a set in canonical form: hashes sorted ascending and deduplicated.
    pub fn canonical(
        issuer_public_key: Vec<u8>,
        version: VersionLabel,
        published_at: u64,
        hashes: impl IntoIterator<Item = CredentialHash>,
    ) -> Self {
        let mut hashes: Vec<_> = hashes.into_iter().collect();
        hashes.sort_unstable();
        hashes.dedup();
        Self {
            issuer_public_key,
            version: version.get(),
            published_at,
            hashes,
        }
    }

    pub fn issuer_id(&self) -> IssuerId {
        IssuerId::from_public_key(&self.issuer_public_key)
    }

    /// Checks everything except the signature.
    pub fn check_canonical(&self) -> Result<(), InvalidReason> {
        if self.version == 0 {
            return Err(InvalidReason::ZeroVersion);
        }
        if self.issuer_public_key.len() > u16::MAX as usize {
            return Err(InvalidReason::KeyTooLong);
        }
        if self.hashes.is_empty() {
            return Err(InvalidReason::EmptySet);
        }
        if self.hashes.len() > u32::MAX as usize {
            return Err(InvalidReason::TooManyHashes);
        }
        for pair in self.hashes.windows(2) {
            match pair[0].cmp(&pair[1]) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => return Err(InvalidReason::DuplicateHash),
                std::cmp::Ordering::Greater => return Err(InvalidReason::NonCanonicalOrder),
            }
        }
        Ok(())
    }

    /// Length of the pk..hashes body shared by the preimage and the wire payload.
    pub(crate) fn body_len(&self) -> usize {
        2 + self.issuer_public_key.len() + 8 + 8 + 4 + 32 * self.hashes.len()
    }

    /// Writes `u16 pk_len | pk | u64 version | u64 published_at | u32 count | hashes`.
    /// Lengths must already fit their fields.
    pub(crate) fn write_body(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.issuer_public_key.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.issuer_public_key);
        out.extend_from_slice(&self.version.to_be_bytes());
        out.extend_from_slice(&self.published_at.to_be_bytes());
        out.extend_from_slice(&(self.hashes.len() as u32).to_be_bytes());
        for h in &self.hashes {
            out.extend_from_slice(h.as_bytes());
        }
    }

    fn preimage_unchecked(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DOMAIN_TAG.len() + self.body_len());
        out.extend_from_slice(DOMAIN_TAG);
        self.write_body(&mut out);
        out
    }

    pub fn contains(&self, hash: &CredentialHash) -> bool {
        self.hashes.binary_search(hash).is_ok()
    }
}

/// The signing preimage of a canonical-form set.
pub fn canonical_bytes(set: &RevocationSet) -> Result<Vec<u8>, RevocationError> {
    set.check_canonical().map_err(RevocationError::Invalid)?;
    Ok(set.preimage_unchecked())
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedRevocationSet {
    pub set: RevocationSet,
    pub signature: Signature,
}

impl SignedRevocationSet {
    pub fn issuer_id(&self) -> IssuerId {
        self.set.issuer_id()
    }

    /// `None` for a zero version, which never validates.
    pub fn version(&self) -> Option<VersionLabel> {
        VersionLabel::new(self.set.version)
    }
}

/// Why a signed set failed validation.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvalidReason {
    #[error("signature does not verify")]
    BadSignature,
    #[error("revocation set is empty")]
    EmptySet,
    #[error("hashes are not in ascending order")]
    NonCanonicalOrder,
    #[error("duplicate hash in set")]
    DuplicateHash,
    #[error("version label must be at least 1")]
    ZeroVersion,
    #[error("public key longer than 65535 bytes")]
    KeyTooLong,
    #[error("more hashes than a u32 count can describe")]
    TooManyHashes,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RevocationError {
    #[error("invalid revocation set: {0}")]
    Invalid(InvalidReason),
    #[error("version {got} does not follow {previous} (labels must be consecutive)")]
    VersionOutOfSequence { previous: u64, got: u64 },
    #[error("credential {0} is already revoked by this issuer")]
    AlreadyRevoked(CredentialHash),
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("existing set from a different issuer key")]
    ForeignSet,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Validity of an arbitrary, possibly hostile, signed set: canonical form
/// first, then the issuer signature over [`canonical_bytes`].
pub fn validate_signed_set(candidate: &SignedRevocationSet) -> Result<(), InvalidReason> {
    candidate.set.check_canonical()?;
    let preimage = candidate.set.preimage_unchecked();
    if crypto::verify(
        &candidate.set.issuer_public_key,
        &candidate.signature,
        &preimage,
    ) {
        Ok(())
    } else {
        Err(InvalidReason::BadSignature)
    }
}

/// Sign one batch of new revocations.
///
/// `previous_version` is the highest version this issuer has published (0 if
/// none); `next_version` must be exactly one more. `new_hashes` must not
/// intersect `previously_revoked`. Duplicates inside `new_hashes` are merged.
pub fn issue_revocations(
    keypair: &KeyPair,
    previous_version: u64,
    next_version: u64,
    published_at: u64,
    new_hashes: &[CredentialHash],
    previously_revoked: &HashSet<CredentialHash>,
) -> Result<SignedRevocationSet, RevocationError> {
    if next_version != previous_version + 1 {
        return Err(RevocationError::VersionOutOfSequence {
            previous: previous_version,
            got: next_version,
        });
    }
    if let Some(h) = new_hashes.iter().find(|h| previously_revoked.contains(h)) {
        return Err(RevocationError::AlreadyRevoked(*h));
    }
    let version =
        VersionLabel::new(next_version).ok_or(RevocationError::Invalid(InvalidReason::ZeroVersion))?;
    let set = RevocationSet::canonical(
        keypair.public_key.clone(),
        version,
        published_at,
        new_hashes.iter().copied(),
    );
    let preimage = canonical_bytes(&set)?;
    let signature = crypto::sign(&keypair.secret_key, &preimage)?;
    Ok(SignedRevocationSet { set, signature })
}

/// Issuer-side bookkeeping: the next version to assign and every hash
/// published so far.
#[derive(Debug, Clone)]
pub struct Issuer {
    keypair: KeyPair,
    id: IssuerId,
    last_version: u64,
    revoked: HashSet<CredentialHash>,
}

impl Issuer {
    pub fn new(keypair: KeyPair) -> Self {
        let id = IssuerId::from_public_key(&keypair.public_key);
        Self {
            keypair,
            id,
            last_version: 0,
            revoked: HashSet::new(),
        }
    }

    /// Rebuild issuer state from its already-published sets (any order).
    /// Fails if a set is invalid, foreign, or the versions are not exactly
    /// 1..=k, or two sets share a hash.
    pub fn resume<'a>(
        keypair: KeyPair,
        published: impl IntoIterator<Item = &'a SignedRevocationSet>,
    ) -> Result<Self, RevocationError> {
        let mut issuer = Self::new(keypair);
        let mut sets: Vec<&SignedRevocationSet> = published.into_iter().collect();
        sets.sort_by_key(|s| s.set.version);
        for s in sets {
            if s.set.issuer_public_key != issuer.keypair.public_key {
                return Err(RevocationError::ForeignSet);
            }
            validate_signed_set(s).map_err(RevocationError::Invalid)?;
            if s.set.version != issuer.last_version + 1 {
                return Err(RevocationError::VersionOutOfSequence {
                    previous: issuer.last_version,
                    got: s.set.version,
                });
            }
            for h in &s.set.hashes {
                if !issuer.revoked.insert(*h) {
                    return Err(RevocationError::AlreadyRevoked(*h));
                }
            }
            issuer.last_version = s.set.version;
        }
        Ok(issuer)
    }

    pub fn id(&self) -> IssuerId {
        self.id
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn last_version(&self) -> u64 {
        self.last_version
    }

    pub fn is_revoked(&self, hash: &CredentialHash) -> bool {
        self.revoked.contains(hash)
    }

    /// Publish one set under the next version label.
    pub fn issue(
        &mut self,
        published_at: u64,
        hashes: &[CredentialHash],
    ) -> Result<SignedRevocationSet, RevocationError> {
        let signed = issue_revocations(
            &self.keypair,
            self.last_version,
            self.last_version + 1,
            published_at,
            hashes,
            &self.revoked,
        )?;
        self.revoked.extend(signed.set.hashes.iter().copied());
        self.last_version += 1;
        Ok(signed)
    }

    /// Split a large batch into consecutive sets of at most `batch_size`
    /// hashes, each signed on its own. All-or-nothing: nothing is issued if
    /// any hash was already revoked.
    pub fn issue_batches(
        &mut self,
        published_at: u64,
        hashes: &[CredentialHash],
        batch_size: usize,
    ) -> Result<Vec<Arc<SignedRevocationSet>>, RevocationError> {
        if batch_size == 0 {
            return Err(RevocationError::ZeroBatchSize);
        }
        let mut unique: Vec<CredentialHash> = hashes.to_vec();
        unique.sort_unstable();
        unique.dedup();
        if unique.is_empty() {
            return Err(RevocationError::Invalid(InvalidReason::EmptySet));
        }
        if let Some(h) = unique.iter().find(|h| self.revoked.contains(h)) {
            return Err(RevocationError::AlreadyRevoked(*h));
        }
        // Keep caller order within the batch split, so batches are stable
        // with respect to input order rather than hash order.
        let mut seen = HashSet::with_capacity(unique.len());
        let ordered: Vec<CredentialHash> =
            hashes.iter().copied().filter(|h| seen.insert(*h)).collect();
        ordered
            .chunks(batch_size)
            .map(|chunk| self.issue(published_at, chunk).map(Arc::new))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;
    use proptest::prelude::*;

    fn h(b: u8) -> CredentialHash {
        Digest256([b; 32])
    }

    fn kp() -> KeyPair {
        keygen(&[3u8; 32]).unwrap()
    }

    #[test]
    fn canonical_bytes_ignore_insertion_order() {
        let a = RevocationSet::canonical(vec![1; 32], VersionLabel::FIRST, 5, [h(3), h(1), h(2)]);
        let b = RevocationSet::canonical(vec![1; 32], VersionLabel::FIRST, 5, [h(2), h(3), h(1)]);
        assert_eq!(canonical_bytes(&a).unwrap(), canonical_bytes(&b).unwrap());
    }

    #[test]
    fn canonical_bytes_layout() {
        let set = RevocationSet::canonical(vec![0xAB; 32], VersionLabel::FIRST, 0, [h(0)]);
        let bytes = canonical_bytes(&set).unwrap();
        assert_eq!(bytes.len(), 10 + 2 + 32 + 8 + 8 + 4 + 32);
        assert_eq!(&bytes[..10], b"SSI-REV-V1");
        assert_eq!(&bytes[10..12], &[0, 32]);
        assert_eq!(&bytes[44..52], &1u64.to_be_bytes());
        assert_eq!(&bytes[52..60], &0u64.to_be_bytes());
        assert_eq!(&bytes[60..64], &1u32.to_be_bytes());
        assert!(bytes[64..].iter().all(|&b| b == 0));
    }

    #[test]
    fn canonical_bytes_cover_timestamp() {
        let a = RevocationSet::canonical(vec![1; 32], VersionLabel::FIRST, 5, [h(1)]);
        let mut b = a.clone();
        b.published_at += 1;
        assert_ne!(canonical_bytes(&a).unwrap(), canonical_bytes(&b).unwrap());
    }

    #[test]
    fn canonical_bytes_rejects_non_canonical() {
        let mut set = RevocationSet::canonical(vec![1; 32], VersionLabel::FIRST, 5, [h(1), h(2)]);
        set.hashes.reverse();
        assert_eq!(
            canonical_bytes(&set),
            Err(RevocationError::Invalid(InvalidReason::NonCanonicalOrder))
        );
        set.hashes = vec![h(1), h(1)];
        assert_eq!(
            canonical_bytes(&set),
            Err(RevocationError::Invalid(InvalidReason::DuplicateHash))
        );
    }

    #[test]
    fn first_set_verifies() {
        let signed =
            issue_revocations(&kp(), 0, 1, 100, &[h(1), h(2), h(3)], &HashSet::new()).unwrap();
        assert_eq!(signed.set.hashes.len(), 3);
        assert_eq!(validate_signed_set(&signed), Ok(()));
    }

    #[test]
    fn version_gap_and_reuse_rejected() {
        let err = issue_revocations(&kp(), 1, 3, 100, &[h(1)], &HashSet::new()).unwrap_err();
        assert_eq!(
            err,
            RevocationError::VersionOutOfSequence {
                previous: 1,
                got: 3
            }
        );
        assert!(issue_revocations(&kp(), 1, 1, 100, &[h(1)], &HashSet::new()).is_err());
    }

    #[test]
    fn re_revocation_rejected() {
        let mut issuer = Issuer::new(kp());
        issuer.issue(1, &[h(1), h(2)]).unwrap();
        assert_eq!(
            issuer.issue(2, &[h(3), h(2)]),
            Err(RevocationError::AlreadyRevoked(h(2)))
        );
        assert_eq!(issuer.last_version(), 1);
    }

    #[test]
    fn empty_set_rejected() {
        let mut issuer = Issuer::new(kp());
        assert_eq!(
            issuer.issue(1, &[]),
            Err(RevocationError::Invalid(InvalidReason::EmptySet))
        );
        assert!(issuer.issue_batches(1, &[], 10).is_err());
    }

    #[test]
    fn tampered_hash_is_bad_signature() {
        let mut signed =
            issue_revocations(&kp(), 0, 1, 100, &[h(1), h(5)], &HashSet::new()).unwrap();
        signed.set.hashes[1].0[31] ^= 1;
        assert_eq!(validate_signed_set(&signed), Err(InvalidReason::BadSignature));
    }

    #[test]
    fn descending_order_is_invalid_even_if_signed() {
        let keys = kp();
        let mut set = RevocationSet::canonical(keys.public_key.clone(), VersionLabel::FIRST, 0, [h(1), h(2)]);
        set.hashes.reverse();
        let signature = crypto::sign(&keys.secret_key, &set.preimage_unchecked()).unwrap();
        let signed = SignedRevocationSet { set, signature };
        assert_eq!(validate_signed_set(&signed), Err(InvalidReason::NonCanonicalOrder));
    }

    #[test]
    fn batches_get_consecutive_versions() {
        let mut issuer = Issuer::new(kp());
        let hashes: Vec<_> = (0..2500u32)
            .map(|i| sha3_256(&i.to_be_bytes()))
            .collect();
        let sets = issuer.issue_batches(7, &hashes, 1000).unwrap();
        let sizes: Vec<_> = sets.iter().map(|s| s.set.hashes.len()).collect();
        assert_eq!(sizes, vec![1000, 1000, 500]);
        let versions: Vec<_> = sets.iter().map(|s| s.set.version).collect();
        assert_eq!(versions, vec![1, 2, 3]);
        assert!(sets.iter().all(|s| validate_signed_set(s).is_ok()));
        assert!(matches!(
            issuer.issue_batches(8, &hashes[..10], 1000),
            Err(RevocationError::AlreadyRevoked(_))
        ));
    }

    #[test]
    fn resume_recovers_state_and_detects_gaps() {
        let mut issuer = Issuer::new(kp());
        let s1 = issuer.issue(1, &[h(1)]).unwrap();
        let s2 = issuer.issue(2, &[h(2)]).unwrap();
        let s3 = issuer.issue(3, &[h(3)]).unwrap();
        let resumed = Issuer::resume(kp(), [&s3, &s1, &s2]).unwrap();
        assert_eq!(resumed.last_version(), 3);
        assert!(resumed.is_revoked(&h(2)));
        assert!(matches!(
            Issuer::resume(kp(), [&s1, &s3]),
            Err(RevocationError::VersionOutOfSequence { previous: 1, got: 3 })
        ));
        let other = Issuer::new(keygen(&[4u8; 32]).unwrap());
        assert_eq!(
            Issuer::resume(other.keypair().clone(), [&s1]).unwrap_err(),
            RevocationError::ForeignSet
        );
    }

    fn arb_set() -> impl Strategy<Value = RevocationSet> {
        (
            proptest::collection::vec(any::<u8>(), 0..40),
            1u64..1000,
            any::<u64>(),
            proptest::collection::btree_set(any::<[u8; 32]>(), 1..6),
        )
            .prop_map(|(pk, v, ts, hashes)| {
                RevocationSet::canonical(
                    pk,
                    VersionLabel::new(v).unwrap(),
                    ts,
                    hashes.into_iter().map(Digest256),
                )
            })
    }

    proptest! {
        #[test]
        fn canonical_bytes_injective(a in arb_set(), b in arb_set()) {
            let ea = canonical_bytes(&a).unwrap();
            let eb = canonical_bytes(&b).unwrap();
            prop_assert_eq!(a == b, ea == eb);
        }

        #[test]
        fn honest_issue_always_validates(batch in proptest::collection::vec(any::<[u8; 32]>(), 1..20),
                                         ts in any::<u64>()) {
            let mut issuer = Issuer::new(kp());
            let hashes: Vec<_> = batch.into_iter().map(Digest256).collect();
            let sets = issuer.issue_batches(ts, &hashes, 3).unwrap();
            for (i, s) in sets.iter().enumerate() {
                prop_assert_eq!(s.set.version, i as u64 + 1);
                prop_assert_eq!(validate_signed_set(s), Ok(()));
            }
        }
    }
}
