//! Per-party preprocessing files.
//!
//! ```text
//! header (80 bytes, little endian)
//!   magic            8   b"MPCDEAL\0"
//!   version          4   u32 = 1
//!   party            4   u32
//!   parties          4   u32
//!   precision bits   4   u32
//!   item count       8   u64
//!   seed commitment 32   SHA-256("mpc-bandit dealer seed" || seed_le)
//!   reserved        16   zero
//! item (repeated)
//!   tag              1   u8
//!   params          32   4 x u64
//!   word count       8   u64
//!   words         8*wc   u64 each
//! ```

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Generator, Preprocessing, Request};
use crate::error::{Error, Result};
use crate::ring::FixedPointConfig;

pub const MAGIC: &[u8; 8] = b"MPCDEAL\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 80;

pub fn seed_commitment(seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"mpc-bandit dealer seed");
    h.update(seed.to_le_bytes());
    h.finalize().into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoreHeader {
    pub party: u32,
    pub parties: u32,
    pub precision_bits: u32,
    pub items: u64,
    pub commitment: [u8; 32],
}

impl StoreHeader {
    fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&VERSION.to_le_bytes());
        b[12..16].copy_from_slice(&self.party.to_le_bytes());
        b[16..20].copy_from_slice(&self.parties.to_le_bytes());
        b[20..24].copy_from_slice(&self.precision_bits.to_le_bytes());
        b[24..32].copy_from_slice(&self.items.to_le_bytes());
        b[32..64].copy_from_slice(&self.commitment);
        b
    }

    fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if &b[0..8] != MAGIC {
            return Err(Error::Format("not a dealer file (bad magic)".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(Error::Format(format!("dealer file version {version}, expected {VERSION}")));
        }
        Ok(StoreHeader {
            party: u32_at(12),
            parties: u32_at(16),
            precision_bits: u32_at(20),
            items: u64::from_le_bytes(b[24..32].try_into().unwrap()),
            commitment: b[32..64].try_into().unwrap(),
        })
    }

    pub fn verify_seed(&self, seed: u64) -> bool {
        self.commitment == seed_commitment(seed)
    }
}

pub fn party_file_name(party: usize) -> String {
    format!("party{party}.dealer")
}

/// Generates `plan` with `seed` and writes one file per party into `dir`.
pub fn write_party_files(
    dir: &Path,
    plan: &[Request],
    parties: usize,
    seed: u64,
    fx: FixedPointConfig,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = (0..parties).map(|p| dir.join(party_file_name(p))).collect();
    let mut writers = paths
        .iter()
        .map(|p| File::create(p).map(BufWriter::new))
        .collect::<std::io::Result<Vec<_>>>()?;
    let commitment = seed_commitment(seed);
    for (p, w) in writers.iter_mut().enumerate() {
        let h = StoreHeader {
            party: p as u32,
            parties: parties as u32,
            precision_bits: fx.precision_bits(),
            items: plan.len() as u64,
            commitment,
        };
        w.write_all(&h.to_bytes())?;
    }
    let mut g = Generator::new(seed, parties, fx);
    for req in plan {
        let shares = g.generate(req)?;
        for (w, words) in writers.iter_mut().zip(shares) {
            w.write_all(&[req.tag()])?;
            for p in req.params() {
                w.write_all(&p.to_le_bytes())?;
            }
            w.write_all(&(words.len() as u64).to_le_bytes())?;
            for x in words {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    for mut w in writers {
        w.flush()?;
    }
    Ok(paths)
}

/// A party's preprocessing read from its file, served in order.
pub struct FileStore {
    header: StoreHeader,
    items: VecDeque<(Request, Vec<u64>)>,
    consumed: usize,
}

impl FileStore {
    pub fn open(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut hb = [0u8; HEADER_LEN];
        r.read_exact(&mut hb)?;
        let header = StoreHeader::from_bytes(&hb)?;
        let mut items = VecDeque::with_capacity(header.items as usize);
        let mut u64_buf = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
            r.read_exact(&mut u64_buf)?;
            Ok(u64::from_le_bytes(u64_buf))
        };
        for _ in 0..header.items {
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag)?;
            let mut params = [0u64; 4];
            for p in params.iter_mut() {
                *p = read_u64(&mut r)?;
            }
            let req = Request::from_parts(tag[0], params)?;
            let count = read_u64(&mut r)? as usize;
            if count != req.words() {
                return Err(Error::Format(format!(
                    "{} item holds {count} words, expected {}",
                    req.name(),
                    req.words()
                )));
            }
            let mut bytes = vec![0u8; count * 8];
            r.read_exact(&mut bytes)?;
            let words = bytes
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            items.push_back((req, words));
        }
        Ok(FileStore {
            header,
            items,
            consumed: 0,
        })
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn remaining(&self) -> usize {
        self.items.len()
    }
}

impl Preprocessing for FileStore {
    fn next(&mut self, request: &Request) -> Result<Vec<u64>> {
        let (stored, _) = self.items.front().ok_or_else(|| {
            Error::Exhausted(format!(
                "party {} store empty after {} items ({} requested)",
                self.header.party,
                self.consumed,
                request.name()
            ))
        })?;
        if stored != request {
            return Err(Error::PreprocessingDesync {
                index: self.consumed,
                expected: stored.describe(),
                requested: request.describe(),
            });
        }
        let (_, words) = self.items.pop_front().unwrap();
        self.consumed += 1;
        Ok(words)
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}
