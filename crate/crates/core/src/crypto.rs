//! Hashing and signatures.
//!
//! Every digest in the system is SHA3-256. Signatures go through the
//! [`SignatureScheme`] trait; [`Ed25519`] is the reference profile and the
//! one the wire format is pinned to (32-byte public keys, 64-byte signatures).

use std::fmt;

use ed25519_dalek::{Signer, Verifier};
use sha3::{Digest, Sha3_256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("seed must be {expected} bytes, got {actual}")]
    SeedLength { expected: usize, actual: usize },
    #[error("secret key must be {expected} bytes, got {actual}")]
    SecretKeyLength { expected: usize, actual: usize },
    #[error("public key must be {expected} bytes, got {actual}")]
    PublicKeyLength { expected: usize, actual: usize },
    #[error("public key is not a valid curve point")]
    InvalidPublicKey,
}

/// A 32-byte SHA3-256 output. Used both for credential hashes and for
/// issuer-key digests.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest256(pub [u8; 32]);

impl Digest256 {
    pub const LEN: usize = 32;

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; 32]>::try_from(bytes).ok().map(Self)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s.trim()).ok()?;
        Self::from_slice(&bytes)
    }
}

impl fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest256({})", self.to_hex())
    }
}

impl fmt::Display for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<[u8; 32]> for Digest256 {
    fn from(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }
}

/// FIPS 202 SHA3-256.
pub fn sha3_256(data: &[u8]) -> Digest256 {
    Digest256(Sha3_256::digest(data).into())
}

/// Hash several slices as if concatenated, without allocating.
pub fn sha3_256_parts(parts: &[&[u8]]) -> Digest256 {
    let mut hasher = Sha3_256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest256(hasher.finalize().into())
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public_key: Vec<u8>,
    pub secret_key: Vec<u8>,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public_key", &hex::encode(&self.public_key))
            .finish_non_exhaustive()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<u8>);

impl Signature {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0))
    }
}

/// A deterministic signature scheme.
///
/// `verify` is total: malformed keys or signatures are a rejection, never an
/// error or a panic.
pub trait SignatureScheme {
    const PUBLIC_KEY_LEN: usize;
    const SIGNATURE_LEN: usize;
    const SEED_LEN: usize;

    fn keygen(seed: &[u8]) -> Result<KeyPair, CryptoError>;
    fn sign(secret_key: &[u8], message: &[u8]) -> Result<Signature, CryptoError>;
    fn verify(public_key: &[u8], signature: &[u8], message: &[u8]) -> bool;
    fn check_public_key(public_key: &[u8]) -> Result<(), CryptoError>;
}

/// The reference signature profile.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ed25519;

impl SignatureScheme for Ed25519 {
    const PUBLIC_KEY_LEN: usize = ed25519_dalek::PUBLIC_KEY_LENGTH;
    const SIGNATURE_LEN: usize = ed25519_dalek::SIGNATURE_LENGTH;
    const SEED_LEN: usize = ed25519_dalek::SECRET_KEY_LENGTH;

    fn keygen(seed: &[u8]) -> Result<KeyPair, CryptoError> {
        let seed: [u8; 32] = seed.try_into().map_err(|_| CryptoError::SeedLength {
            expected: Self::SEED_LEN,
            actual: seed.len(),
        })?;
        let signing = ed25519_dalek::SigningKey::from_bytes(&seed);
        Ok(KeyPair {
            public_key: signing.verifying_key().to_bytes().to_vec(),
            secret_key: seed.to_vec(),
        })
    }

    fn sign(secret_key: &[u8], message: &[u8]) -> Result<Signature, CryptoError> {
        let seed: [u8; 32] = secret_key
            .try_into()
            .map_err(|_| CryptoError::SecretKeyLength {
                expected: Self::SEED_LEN,
                actual: secret_key.len(),
            })?;
        let signing = ed25519_dalek::SigningKey::from_bytes(&seed);
        Ok(Signature(signing.sign(message).to_bytes().to_vec()))
    }

    fn verify(public_key: &[u8], signature: &[u8], message: &[u8]) -> bool {
        let Ok(pk) = <[u8; 32]>::try_from(public_key) else {
            return false;
        };
        let Ok(sig) = <[u8; 64]>::try_from(signature) else {
            return false;
        };
        let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(&pk) else {
            return false;
        };
        vk.verify(message, &ed25519_dalek::Signature::from_bytes(&sig))
            .is_ok()
    }

    fn check_public_key(public_key: &[u8]) -> Result<(), CryptoError> {
        let pk: [u8; 32] = public_key
            .try_into()
            .map_err(|_| CryptoError::PublicKeyLength {
                expected: Self::PUBLIC_KEY_LEN,
                actual: public_key.len(),
            })?;
        ed25519_dalek::VerifyingKey::from_bytes(&pk)
            .map(|_| ())
            .map_err(|_| CryptoError::InvalidPublicKey)
    }
}

/// Deterministic key pair under the reference profile.
pub fn keygen(seed: &[u8]) -> Result<KeyPair, CryptoError> {
    Ed25519::keygen(seed)
}

pub fn sign(secret_key: &[u8], message: &[u8]) -> Result<Signature, CryptoError> {
    Ed25519::sign(secret_key, message)
}

pub fn verify(public_key: &[u8], signature: &Signature, message: &[u8]) -> bool {
    Ed25519::verify(public_key, signature.as_bytes(), message)
}
