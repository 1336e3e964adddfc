//! Reader for IDX files (the MNIST container format), plain or gzip.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

/// Unsigned-byte IDX array.
#[derive(Clone, Debug)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn items(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    /// Elements per item (product of the trailing dimensions).
    pub fn item_len(&self) -> usize {
        self.dims[1..].iter().product()
    }

    pub fn item(&self, i: usize) -> &[u8] {
        let n = self.item_len();
        &self.data[i * n..(i + 1) * n]
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Format("not an IDX file".into()));
    }
    if bytes[2] != 0x08 {
        return Err(Error::Format(format!("IDX element type {:#04x} is not u8", bytes[2])));
    }
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    if ndims == 0 || bytes.len() < header {
        return Err(Error::Format("truncated IDX header".into()));
    }
    let dims: Vec<usize> = (0..ndims)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize)
        .collect();
    let total: usize = dims.iter().product();
    if bytes.len() - header != total {
        return Err(Error::Format(format!(
            "IDX body has {} bytes, header promises {total}",
            bytes.len() - header
        )));
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

/// Reads `path`, or `path.gz` when only the compressed file exists.
pub fn read_idx(path: &Path) -> Result<IdxArray> {
    let gz = path.with_file_name(format!(
        "{}.gz",
        path.file_name().and_then(|n| n.to_str()).unwrap_or_default()
    ));
    let mut bytes = Vec::new();
    if path.exists() {
        let mut f = BufReader::new(File::open(path)?);
        if path.extension().is_some_and(|e| e == "gz") {
            GzDecoder::new(f).read_to_end(&mut bytes)?;
        } else {
            f.read_to_end(&mut bytes)?;
        }
    } else if gz.exists() {
        GzDecoder::new(BufReader::new(File::open(&gz)?)).read_to_end(&mut bytes)?;
    } else {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} (or .gz) not found", path.display()),
        )));
    }
    parse_idx(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(dims: &[u32], body: &[u8]) -> Vec<u8> {
        let mut v = vec![0, 0, 8, dims.len() as u8];
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn parses_images_and_labels() {
        let a = parse_idx(&encode(&[2, 2, 3], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12])).unwrap();
        assert_eq!(a.items(), 2);
        assert_eq!(a.item_len(), 6);
        assert_eq!(a.item(1), &[7, 8, 9, 10, 11, 12]);
        let l = parse_idx(&encode(&[3], &[7, 1, 0])).unwrap();
        assert_eq!(l.item_len(), 1);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(parse_idx(&[1, 0, 8, 1]).is_err());
        assert!(parse_idx(&encode(&[4], &[1, 2])).is_err());
        let mut wrong_type = encode(&[1], &[0]);
        wrong_type[2] = 0x0d;
        assert!(parse_idx(&wrong_type).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_idx(Path::new("/nonexistent/train")), Err(Error::Io(_))));
    }
}
