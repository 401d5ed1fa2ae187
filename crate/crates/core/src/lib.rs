//! Distributed attestation revocation over gossip.
//!
//! Issuers publish signed, versioned sets of revoked credential hashes.
//! Clients keep a register of issuers they trust ([`tis`]), store accepted
//! sets in an attestation revocation list ([`arl`]) fronted by a Bloom filter
//! ([`bloom`]), and spread sets to their neighbours with an
//! advertise/request/send exchange ([`gossip`], [`wire`]). Verification of a
//! credential is then a purely local lookup.
//!
//! [`sim`] drives the same node state machine through a seeded
//! discrete-event network model.

pub mod arl;
pub mod bloom;
pub mod crypto;
pub mod gossip;
pub mod log_file;
pub mod revocation;
pub mod sim;
pub mod tis;
pub mod udp;
pub mod wire;

pub use arl::{ArlConfig, ArlMode, AttestationRevocationList, StoreOutcome, Verdict};
pub use bloom::{bloom_fpp, BloomFilter, BloomParams};
pub use crypto::{keygen, sha3_256, sign, verify, Digest256, KeyPair, Signature};
pub use gossip::{Node, NodeConfig, ReceiveOutcome, RejectReason};
pub use revocation::{
    canonical_bytes, issue_revocations, validate_signed_set, CredentialHash, Issuer, IssuerId,
    RevocationSet, SignedRevocationSet, VersionLabel,
};
pub use tis::TrustedIssuerStorage;
pub use wire::{decode_message, encode_message, Advertisement, Message, UpdateRequest};
