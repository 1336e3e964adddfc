//! Wire framing shared by every backend.
//!
//! ```text
//! offset  size  field
//!      0     8  session id      (u64, little endian)
//!      8     8  sequence number (u64, little endian, per directed link)
//!     16     4  label hash      (u32, little endian, FNV-1a of the label)
//!     20     4  payload length  (u32, little endian)
//!     24     n  payload
//! ```

use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 24;

/// 32-bit FNV-1a.
pub fn label_hash(label: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in label.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub session: u64,
    pub seq: u64,
    pub label: u32,
    pub len: u32,
}

impl FrameHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..8].copy_from_slice(&self.session.to_le_bytes());
        out[8..16].copy_from_slice(&self.seq.to_le_bytes());
        out[16..20].copy_from_slice(&self.label.to_le_bytes());
        out[20..24].copy_from_slice(&self.len.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "frame header needs {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        Ok(FrameHeader {
            session: u64_at(0),
            seq: u64_at(8),
            label: u32_at(16),
            len: u32_at(20),
        })
    }
}

/// Header followed by payload in one buffer.
pub fn encode_frame(session: u64, seq: u64, label: &str, payload: &[u8]) -> Result<Vec<u8>> {
    let len = u32::try_from(payload.len())
        .map_err(|_| Error::InvalidArgument(format!("payload of {} bytes", payload.len())))?;
    let header = FrameHeader {
        session,
        seq,
        label: label_hash(label),
        len,
    };
    let mut frame = Vec::with_capacity(HEADER_LEN + payload.len());
    frame.extend_from_slice(&header.to_bytes());
    frame.extend_from_slice(payload);
    Ok(frame)
}

pub fn decode_frame(frame: &[u8]) -> Result<(FrameHeader, &[u8])> {
    let header = FrameHeader::from_bytes(frame)?;
    let body = &frame[HEADER_LEN..];
    if body.len() != header.len as usize {
        return Err(Error::Format(format!(
            "frame declares {} payload bytes, carries {}",
            header.len,
            body.len()
        )));
    }
    Ok((header, body))
}

pub fn words_to_bytes(words: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(words.len() * 8);
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn bytes_to_words(bytes: &[u8]) -> Result<Vec<u64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of words",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
