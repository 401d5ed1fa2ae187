//! Append-only ARL log: wire-encoded payload messages, back to back.
//!
//! A crash can leave a partial record at the end. [`read_log`] stops at the
//! first undecodable record and reports how many bytes were good, so the
//! caller can truncate and keep appending.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::revocation::SignedRevocationSet;
use crate::wire::{decode_prefix, encode_message, CodecError, Message};

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("cannot encode set: {0}")]
    Codec(#[from] CodecError),
    #[error("record at byte {offset} is not a revocation payload")]
    NotAPayload { offset: usize },
}

#[derive(Debug, Default)]
pub struct LogContents {
    pub sets: Vec<Arc<SignedRevocationSet>>,
    /// Bytes covered by fully decoded records.
    pub valid_len: usize,
    /// Set when decoding stopped before the end of the input.
    pub tail_error: Option<CodecError>,
}

pub fn read_log(bytes: &[u8]) -> Result<LogContents, LogError> {
    let mut contents = LogContents::default();
    while contents.valid_len < bytes.len() {
        match decode_prefix(&bytes[contents.valid_len..]) {
            Ok((Message::Payload(set), used)) => {
                contents.sets.push(set);
                contents.valid_len += used;
            }
            Ok(_) => {
                return Err(LogError::NotAPayload {
                    offset: contents.valid_len,
                })
            }
            Err(e) => {
                contents.tail_error = Some(e);
                break;
            }
        }
    }
    Ok(contents)
}

/// A missing file is an empty log.
pub fn load_log(path: &Path) -> Result<LogContents, LogError> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes)?;
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(LogContents::default()),
        Err(e) => return Err(e.into()),
    }
    read_log(&bytes)
}

pub fn encode_record(set: &Arc<SignedRevocationSet>) -> Result<Vec<u8>, LogError> {
    Ok(encode_message(&Message::Payload(set.clone()))?)
}

/// Appends records to a log, one `write_all` per record.
#[derive(Debug)]
pub struct LogWriter {
    file: File,
}

impl LogWriter {
    /// Opens for append, first cutting the file back to `valid_len` if it is
    /// longer (dropping a torn tail).
    pub fn open(path: &Path, valid_len: Option<u64>) -> Result<Self, LogError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if let Some(len) = valid_len {
            if file.metadata()?.len() > len {
                file.set_len(len)?;
            }
        }
        Ok(Self { file })
    }

    pub fn append(&mut self, set: &Arc<SignedRevocationSet>) -> Result<(), LogError> {
        let bytes = encode_record(set)?;
        self.file.write_all(&bytes)?;
        self.file.flush()?;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), LogError> {
        self.file.sync_data()?;
        Ok(())
    }
}
