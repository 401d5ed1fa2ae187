use std::io;
use std::path::PathBuf;

use revo_core::crypto::CryptoError;
use revo_core::gossip::ConfigError;
use revo_core::log_file::LogError;
use revo_core::revocation::RevocationError;
use revo_core::sim::SimError;
use revo_core::tis::TisError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation; exits with status 1.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Tis { path: PathBuf, source: TisError },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogError },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Revocation(#[from] RevocationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    NodeConfig(#[from] ConfigError),
    #[error("{context}: {source}")]
    Net { context: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn log(path: impl Into<PathBuf>) -> impl FnOnce(LogError) -> Self {
        let path = path.into();
        move |source| CliError::Log { path, source }
    }

    pub fn tis(path: impl Into<PathBuf>) -> impl FnOnce(TisError) -> Self {
        let path = path.into();
        move |source| CliError::Tis { path, source }
    }
}
