//! Trusted Issuer Storage: the issuer public keys a client has chosen to
//! acknowledge. Revocations from anyone else are ignored.
//!
//! On disk the register is plain text, one hex public key per line. Blank
//! lines and anything after `#` are ignored.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::crypto::{CryptoError, Ed25519, SignatureScheme};
use crate::revocation::IssuerId;

#[derive(Debug, Error)]
pub enum TisError {
    #[error("malformed issuer key: {0}")]
    MalformedKey(#[from] CryptoError),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Untrust {
    Removed,
    Absent,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustedIssuerStorage {
    // Ordered so persistence and advertisements are deterministic.
    entries: BTreeMap<IssuerId, Vec<u8>>,
}

impl TrustedIssuerStorage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Idempotent.
    pub fn trust(&mut self, public_key: &[u8]) -> Result<IssuerId, TisError> {
        Ed25519::check_public_key(public_key)?;
        let id = IssuerId::from_public_key(public_key);
        self.entries.entry(id).or_insert_with(|| public_key.to_vec());
        Ok(id)
    }

    pub fn untrust(&mut self, issuer: &IssuerId) -> Untrust {
        match self.entries.remove(issuer) {
            Some(_) => Untrust::Removed,
            None => Untrust::Absent,
        }
    }

    pub fn lookup(&self, issuer: &IssuerId) -> Option<&[u8]> {
        self.entries.get(issuer).map(Vec::as_slice)
    }

    pub fn contains(&self, issuer: &IssuerId) -> bool {
        self.entries.contains_key(issuer)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn issuers(&self) -> impl Iterator<Item = (&IssuerId, &[u8])> {
        self.entries.iter().map(|(id, pk)| (id, pk.as_slice()))
    }

    pub fn parse(text: &str) -> Result<Self, TisError> {
        let mut tis = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let key = hex::decode(line).map_err(|e| TisError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
            tis.trust(&key).map_err(|e| TisError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(tis)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# trusted issuer public keys (hex), one per line\n");
        for (id, pk) in &self.entries {
            out.push_str(&format!("{}  # {}\n", hex::encode(pk), &id.0.to_hex()[..16]));
        }
        out
    }

    /// A missing file is an empty register.
    pub fn load(path: &Path) -> Result<Self, TisError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), TisError> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}
