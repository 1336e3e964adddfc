use crate::error::{Error, Result};

/// One unit of correlated randomness, as asked for by the online protocol.
///
/// Every party issues the same sequence of requests; the k-th request of each
/// party is served from the same dealer item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Request {
    /// Matrix triple `C = A B` for `batch` products of `(m x k) (k x n)`.
    /// Element-wise triples use `m = k = n = 1`.
    MatTriple {
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    /// `(a, a^2)` pairs.
    SquarePair { len: usize },
    /// XOR-shared `(a, b, a & b)` on 64-bit words.
    BinaryTriple { len: usize },
    /// XOR sharings of zero.
    XorZero { len: usize },
    /// `[r]` with unsigned wrap count `[theta_r]`.
    WrapHelper { len: usize },
    /// Random bits known both XOR-shared and arithmetically shared, `width`
    /// bits per element (1 or 64).
    DaBits { len: usize, width: usize },
    /// Three XOR-shared random bits per element plus arithmetic shares of all
    /// seven non-empty products of them.
    BitTable { len: usize },
    /// One encoded Bernoulli draw `y in {0, B}`.
    Bernoulli { epsilon: f64 },
    /// Encoded uniforms on `[0, 1)`.
    Uniform { len: usize },
    /// A random permutation of `1..=n` at integer scale.
    Permutation { n: usize },
}

impl Request {
    pub fn name(&self) -> &'static str {
        match self {
            Request::MatTriple { .. } => "mat_triple",
            Request::SquarePair { .. } => "square_pair",
            Request::BinaryTriple { .. } => "binary_triple",
            Request::XorZero { .. } => "xor_zero",
            Request::WrapHelper { .. } => "wrap_helper",
            Request::DaBits { .. } => "dabits",
            Request::BitTable { .. } => "bit_table",
            Request::Bernoulli { .. } => "bernoulli",
            Request::Uniform { .. } => "uniform",
            Request::Permutation { .. } => "permutation",
        }
    }

    /// Number of 64-bit words each party receives for this item.
    pub fn words(&self) -> usize {
        match *self {
            Request::MatTriple { batch, m, k, n } => batch * (m * k + k * n + m * n),
            Request::SquarePair { len } => 2 * len,
            Request::BinaryTriple { len } => 3 * len,
            Request::XorZero { len } => len,
            Request::WrapHelper { len } => 2 * len,
            Request::DaBits { len, width } => len * (1 + width),
            Request::BitTable { len } => 8 * len,
            Request::Bernoulli { .. } => 1,
            Request::Uniform { len } => len,
            Request::Permutation { n } => n,
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            Request::MatTriple { .. } => 1,
            Request::SquarePair { .. } => 2,
            Request::BinaryTriple { .. } => 3,
            Request::XorZero { .. } => 4,
            Request::WrapHelper { .. } => 5,
            Request::DaBits { .. } => 6,
            Request::BitTable { .. } => 7,
            Request::Bernoulli { .. } => 8,
            Request::Uniform { .. } => 9,
            Request::Permutation { .. } => 10,
        }
    }

    pub(crate) fn params(&self) -> [u64; 4] {
        match *self {
            Request::MatTriple { batch, m, k, n } => [batch as u64, m as u64, k as u64, n as u64],
            Request::SquarePair { len }
            | Request::BinaryTriple { len }
            | Request::XorZero { len }
            | Request::WrapHelper { len }
            | Request::BitTable { len }
            | Request::Uniform { len } => [len as u64, 0, 0, 0],
            Request::DaBits { len, width } => [len as u64, width as u64, 0, 0],
            Request::Bernoulli { epsilon } => [epsilon.to_bits(), 0, 0, 0],
            Request::Permutation { n } => [n as u64, 0, 0, 0],
        }
    }

    pub(crate) fn from_parts(tag: u8, p: [u64; 4]) -> Result<Self> {
        let u = |i: usize| p[i] as usize;
        Ok(match tag {
            1 => Request::MatTriple {
                batch: u(0),
                m: u(1),
                k: u(2),
                n: u(3),
            },
            2 => Request::SquarePair { len: u(0) },
            3 => Request::BinaryTriple { len: u(0) },
            4 => Request::XorZero { len: u(0) },
            5 => Request::WrapHelper { len: u(0) },
            6 => Request::DaBits {
                len: u(0),
                width: u(1),
            },
            7 => Request::BitTable { len: u(0) },
            8 => Request::Bernoulli {
                epsilon: f64::from_bits(p[0]),
            },
            9 => Request::Uniform { len: u(0) },
            10 => Request::Permutation { n: u(0) },
            t => return Err(Error::Format(format!("unknown preprocessing tag {t}"))),
        })
    }

    pub fn describe(&self) -> String {
        format!("{self:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_round_trip() {
        let all = [
            Request::MatTriple {
                batch: 2,
                m: 3,
                k: 4,
                n: 5,
            },
            Request::SquarePair { len: 7 },
            Request::BinaryTriple { len: 1 },
            Request::XorZero { len: 9 },
            Request::WrapHelper { len: 3 },
            Request::DaBits { len: 2, width: 64 },
            Request::BitTable { len: 4 },
            Request::Bernoulli { epsilon: 0.1 },
            Request::Uniform { len: 10 },
            Request::Permutation { n: 6 },
        ];
        for r in all {
            assert_eq!(Request::from_parts(r.tag(), r.params()).unwrap(), r);
        }
        assert!(Request::from_parts(0, [0; 4]).is_err());
    }
}
