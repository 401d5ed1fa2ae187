//! Key files: `<prefix>.key` holds the hex secret seed, `<prefix>.pub` the
//! hex public key, each on one line.

use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::OsRng;
use rand::RngCore;
use revo_core::crypto::{keygen, sha3_256_parts};
use revo_core::KeyPair;

use crate::error::CliError;

/// 64 hex digits are the seed itself; anything else must be a decimal
/// integer, expanded with SHA3.
pub fn parse_seed(text: &str) -> Result<[u8; 32], CliError> {
    let text = text.trim();
    if text.len() == 64 {
        if let Ok(bytes) = hex::decode(text) {
            return Ok(bytes.try_into().expect("64 hex digits"));
        }
    }
    let n: u64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("seed must be 64 hex digits or an integer, got {text:?}")))?;
    Ok(sha3_256_parts(&[b"revo-keygen", &n.to_be_bytes()]).0)
}

/// From the flag, else `REVO_SEED`, else the OS.
pub fn key_seed(flag: Option<&str>) -> Result<[u8; 32], CliError> {
    if let Some(s) = flag {
        return parse_seed(s);
    }
    if let Ok(s) = std::env::var("REVO_SEED") {
        return parse_seed(&s);
    }
    let mut seed = [0u8; 32];
    OsRng.fill_bytes(&mut seed);
    Ok(seed)
}

/// Integer seed for simulations: the flag, else `REVO_SEED`, else 0.
pub fn sim_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("REVO_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("REVO_SEED must be an integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

pub fn key_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    (with(".key"), with(".pub"))
}

pub fn write_keypair(prefix: &Path, keypair: &KeyPair) -> Result<(), CliError> {
    let (secret, public) = key_paths(prefix);
    fs::write(&secret, format!("{}\n", hex::encode(&keypair.secret_key))).map_err(CliError::io(&secret))?;
    fs::write(&public, format!("{}\n", hex::encode(&keypair.public_key))).map_err(CliError::io(&public))?;
    Ok(())
}

fn read_hex(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    hex::decode(text.trim()).map_err(|e| CliError::Parse {
        path: path.into(),
        reason: format!("not hex: {e}"),
    })
}

pub fn read_secret_key(path: &Path) -> Result<KeyPair, CliError> {
    let seed = read_hex(path)?;
    keygen(&seed).map_err(|e| CliError::Parse {
        path: path.into(),
        reason: e.to_string(),
    })
}

/// Public key given inline as hex, or as a path to a `.pub` file.
pub fn public_key_arg(arg: &str) -> Result<Vec<u8>, CliError> {
    if let Ok(bytes) = hex::decode(arg.trim()) {
        return Ok(bytes);
    }
    let path = Path::new(arg);
    if path.exists() {
        return read_hex(path);
    }
    Err(CliError::Usage(format!("{arg:?} is neither a hex key nor a key file")))
}
