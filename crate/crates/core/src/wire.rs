//! Binary wire format for the three gossip messages.
//!
//! ```text
//! header   : 0x53 0x52 ("SR") | format 0x01 | type
//! 0x01 ad  : u16 count | count x (32-byte issuer digest | u64 latest version)
//! 0x02 req : u16 count | count x (32-byte issuer digest | u64 lowest missing)
//! 0x03 set : u16 pk_len | pk | u64 version | u64 published_at | u32 count
//!            | count x 32-byte hash | u16 sig_len | sig
//! ```
//!
//! Integers are big-endian. The payload body between the header and the
//! signature is byte-for-byte the signing preimage without its domain tag.
//! Decoding is total: any byte string yields a message or a [`CodecError`].

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::crypto::{Digest256, Signature};
use crate::revocation::{IssuerId, RevocationSet, SignedRevocationSet, VersionLabel};

pub const MAGIC: [u8; 2] = [0x53, 0x52];
pub const FORMAT_VERSION: u8 = 0x01;
pub const TYPE_ADVERTISEMENT: u8 = 0x01;
pub const TYPE_UPDATE_REQUEST: u8 = 0x02;
pub const TYPE_PAYLOAD: u8 = 0x03;
pub const HEADER_LEN: usize = 4;
/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65_507;

const ENTRY_LEN: usize = 32 + 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("truncated message")]
    Truncated,
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported format version {0:#04x}")]
    UnsupportedFormat(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("length field exceeds message")]
    LengthOverflow,
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("version label 0 in entry")]
    ZeroVersion,
    #[error("issuer listed twice")]
    DuplicateIssuer,
    #[error("field too large for its length prefix")]
    FieldTooLarge,
    #[error("encoded message is {0} bytes, over the datagram limit")]
    DatagramTooLarge(usize),
}

/// `(issuer digest, latest contiguous version)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Advertisement {
    pub entries: Vec<(IssuerId, VersionLabel)>,
}

/// `(issuer digest, lowest missing version)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateRequest {
    pub entries: Vec<(IssuerId, VersionLabel)>,
}

impl Advertisement {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl UpdateRequest {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Advertisement(Arc<Advertisement>),
    UpdateRequest(UpdateRequest),
    Payload(Arc<SignedRevocationSet>),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Advertisement(_) => "advertisement",
            Message::UpdateRequest(_) => "update-request",
            Message::Payload(_) => "payload",
        }
    }

    /// Size of [`encode_message`]'s output, without encoding.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN
            + match self {
                Message::Advertisement(ad) => 2 + ENTRY_LEN * ad.entries.len(),
                Message::UpdateRequest(req) => 2 + ENTRY_LEN * req.entries.len(),
                Message::Payload(p) => p.set.body_len() + 2 + p.signature.0.len(),
            }
    }
}

fn encode_entries(out: &mut Vec<u8>, entries: &[(IssuerId, VersionLabel)]) -> Result<(), CodecError> {
    let count = u16::try_from(entries.len()).map_err(|_| CodecError::FieldTooLarge)?;
    out.extend_from_slice(&count.to_be_bytes());
    for (issuer, version) in entries {
        out.extend_from_slice(issuer.0.as_bytes());
        out.extend_from_slice(&version.get().to_be_bytes());
    }
    Ok(())
}

pub fn encode_message(msg: &Message) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(msg.encoded_len());
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    match msg {
        Message::Advertisement(ad) => {
            out.push(TYPE_ADVERTISEMENT);
            encode_entries(&mut out, &ad.entries)?;
        }
        Message::UpdateRequest(req) => {
            out.push(TYPE_UPDATE_REQUEST);
            encode_entries(&mut out, &req.entries)?;
        }
        Message::Payload(p) => {
            out.push(TYPE_PAYLOAD);
            if p.set.issuer_public_key.len() > u16::MAX as usize
                || p.set.hashes.len() > u32::MAX as usize
                || p.signature.0.len() > u16::MAX as usize
            {
                return Err(CodecError::FieldTooLarge);
            }
            p.set.write_body(&mut out);
            out.extend_from_slice(&(p.signature.0.len() as u16).to_be_bytes());
            out.extend_from_slice(&p.signature.0);
        }
    }
    Ok(out)
}

/// [`encode_message`] plus the UDP size limit.
pub fn encode_datagram(msg: &Message) -> Result<Vec<u8>, CodecError> {
    let len = msg.encoded_len();
    if len > MAX_DATAGRAM {
        return Err(CodecError::DatagramTooLarge(len));
    }
    encode_message(msg)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::LengthOverflow)?;
        let slice = self.buf.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn digest(&mut self) -> Result<Digest256, CodecError> {
        Ok(Digest256(self.take(32)?.try_into().unwrap()))
    }
}

fn decode_entries(r: &mut Reader<'_>) -> Result<Vec<(IssuerId, VersionLabel)>, CodecError> {
    let count = r.u16()? as usize;
    if count * ENTRY_LEN > r.remaining() {
        return Err(CodecError::Truncated);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let issuer = IssuerId(r.digest()?);
        let version = VersionLabel::new(r.u64()?).ok_or(CodecError::ZeroVersion)?;
        if !seen.insert(issuer) {
            return Err(CodecError::DuplicateIssuer);
        }
        entries.push((issuer, version));
    }
    Ok(entries)
}

fn decode_payload(r: &mut Reader<'_>) -> Result<SignedRevocationSet, CodecError> {
    let pk_len = r.u16()? as usize;
    let issuer_public_key = r.take(pk_len)?.to_vec();
    let version = r.u64()?;
    let published_at = r.u64()?;
    let count = r.u32()? as usize;
    let hash_bytes = count.checked_mul(32).ok_or(CodecError::LengthOverflow)?;
    if hash_bytes > r.remaining() {
        return Err(CodecError::LengthOverflow);
    }
    let hashes = r
        .take(hash_bytes)?
        .chunks_exact(32)
        .map(|c| Digest256(c.try_into().unwrap()))
        .collect();
    let sig_len = r.u16()? as usize;
    let signature = Signature(r.take(sig_len)?.to_vec());
    Ok(SignedRevocationSet {
        set: RevocationSet {
            issuer_public_key,
            version,
            published_at,
            hashes,
        },
        signature,
    })
}

/// Decode one message from the front of `bytes`, returning it with the
/// number of bytes consumed. Used to replay concatenated logs.
pub fn decode_prefix(bytes: &[u8]) -> Result<(Message, usize), CodecError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(2)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let format = r.u8()?;
    if format != FORMAT_VERSION {
        return Err(CodecError::UnsupportedFormat(format));
    }
    let msg = match r.u8()? {
        TYPE_ADVERTISEMENT => Message::Advertisement(Arc::new(Advertisement {
            entries: decode_entries(&mut r)?,
        })),
        TYPE_UPDATE_REQUEST => Message::UpdateRequest(UpdateRequest {
            entries: decode_entries(&mut r)?,
        }),
        TYPE_PAYLOAD => Message::Payload(Arc::new(decode_payload(&mut r)?)),
        other => return Err(CodecError::UnknownType(other)),
    };
    Ok((msg, r.pos))
}

/// Decode exactly one message occupying all of `bytes`.
pub fn decode_message(bytes: &[u8]) -> Result<Message, CodecError> {
    let (msg, used) = decode_prefix(bytes)?;
    if used != bytes.len() {
        return Err(CodecError::TrailingBytes(bytes.len() - used));
    }
    Ok(msg)
}
