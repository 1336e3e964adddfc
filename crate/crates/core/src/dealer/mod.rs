//! Trusted dealer for the offline phase.
//!
//! The dealer turns a seed into an ordered stream of correlated-randomness
//! items. In-process sessions share one [`SharedDealer`] that materializes an
//! item when the first party asks for it and frees it once every party has
//! taken its share. Separate processes read the same stream from per-party
//! files (see [`store`]).

mod request;
pub mod store;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::ring::{FixedPointConfig, RingElement};
use crate::sharing::{share_words, xor_share_words, ArithmeticShare};
use crate::tensor::{RingTensor, Shape};

pub use request::Request;
pub use store::{write_party_files, FileStore, StoreHeader};

/// Exploration draws shared between the dealer and the plaintext learner, so
/// both see the same `y_t`, `v_a` and `gamma`.
#[derive(Clone, Debug)]
pub struct ExplorationRng {
    rng: ChaCha20Rng,
}

impl ExplorationRng {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1);
        ExplorationRng { rng }
    }

    pub fn bernoulli(&mut self, epsilon: f64) -> bool {
        self.rng.random::<f64>() < epsilon
    }

    /// Integer `k` in `[0, 2^L)`; the uniform value is `k / 2^L`.
    pub fn uniform_fixed(&mut self, fx: FixedPointConfig) -> u64 {
        self.rng.next_u64() >> (64 - fx.precision_bits())
    }

    /// Random permutation of `1..=n`.
    pub fn permutation(&mut self, n: usize) -> Vec<u64> {
        let mut p: Vec<u64> = (1..=n as u64).collect();
        p.shuffle(&mut self.rng);
        p
    }
}

/// Randomness sources of one dealer.
pub struct Generator {
    parties: usize,
    fx: FixedPointConfig,
    material: ChaCha20Rng,
    exploration: ExplorationRng,
}

impl Generator {
    pub fn new(seed: u64, parties: usize, fx: FixedPointConfig) -> Self {
        Generator {
            parties,
            fx,
            material: ChaCha20Rng::seed_from_u64(seed),
            exploration: ExplorationRng::new(seed),
        }
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        self.fx
    }

    fn random_words(&mut self, len: usize) -> Vec<u64> {
        (0..len).map(|_| self.material.next_u64()).collect()
    }

    fn random_bits(&mut self, len: usize) -> Vec<u64> {
        (0..len).map(|_| self.material.next_u64() & 1).collect()
    }

    fn share(&mut self, secret: &[u64]) -> Vec<Vec<u64>> {
        share_words(secret, self.parties, &mut self.material)
    }

    fn xor_share(&mut self, secret: &[u64]) -> Vec<Vec<u64>> {
        xor_share_words(secret, self.parties, &mut self.material)
    }

    /// Produces every party's words for one item.
    pub fn generate(&mut self, req: &Request) -> Result<Vec<Vec<u64>>> {
        let n = self.parties;
        let mut out: Vec<Vec<u64>> = (0..n).map(|_| Vec::with_capacity(req.words())).collect();
        let append = |out: &mut Vec<Vec<u64>>, parts: Vec<Vec<u64>>| {
            for (o, p) in out.iter_mut().zip(parts) {
                o.extend_from_slice(&p);
            }
        };
        match *req {
            Request::MatTriple { batch, m, k, n: cols } => {
                let a = RingTensor::from_u64(Shape::new(batch, m, k), self.random_words(batch * m * k))?;
                let b = RingTensor::from_u64(
                    Shape::new(batch, k, cols),
                    self.random_words(batch * k * cols),
                )?;
                let c = if m == 1 && k == 1 && cols == 1 {
                    a.hadamard(&b.clone().reshape(a.shape())?)?
                } else {
                    a.matmul(&b)?
                };
                let parts = [a.to_u64(), b.to_u64(), c.to_u64()];
                for p in parts {
                    let s = self.share(&p);
                    append(&mut out, s);
                }
            }
            Request::SquarePair { len } => {
                let a = self.random_words(len);
                let sq: Vec<u64> = a.iter().map(|x| x.wrapping_mul(*x)).collect();
                let s = self.share(&a);
                append(&mut out, s);
                let s = self.share(&sq);
                append(&mut out, s);
            }
            Request::BinaryTriple { len } => {
                let a = self.random_words(len);
                let b = self.random_words(len);
                let c: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x & y).collect();
                for p in [a, b, c] {
                    let s = self.xor_share(&p);
                    append(&mut out, s);
                }
            }
            Request::XorZero { len } => {
                let s = self.xor_share(&vec![0; len]);
                append(&mut out, s);
            }
            Request::WrapHelper { len } => {
                let r_shares: Vec<Vec<u64>> = (0..n).map(|_| self.random_words(len)).collect();
                let theta: Vec<u64> = (0..len)
                    .map(|i| {
                        let sum: u128 = r_shares.iter().map(|s| s[i] as u128).sum();
                        (sum >> 64) as u64
                    })
                    .collect();
                append(&mut out, r_shares);
                let s = self.share(&theta);
                append(&mut out, s);
            }
            Request::DaBits { len, width } => {
                if width == 0 || width > 64 {
                    return Err(Error::InvalidArgument(format!("dabit width {width}")));
                }
                let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
                let rho: Vec<u64> = self.random_words(len).into_iter().map(|w| w & mask).collect();
                let s = self.xor_share(&rho);
                append(&mut out, s);
                let bits: Vec<u64> = rho
                    .iter()
                    .flat_map(|r| (0..width).map(move |j| (r >> j) & 1))
                    .collect();
                let s = self.share(&bits);
                append(&mut out, s);
            }
            Request::BitTable { len } => {
                let r1 = self.random_bits(len);
                let r2 = self.random_bits(len);
                let r3 = self.random_bits(len);
                let packed: Vec<u64> = (0..len).map(|i| r1[i] | (r2[i] << 1) | (r3[i] << 2)).collect();
                let s = self.xor_share(&packed);
                append(&mut out, s);
                let mono: Vec<u64> = (0..len)
                    .flat_map(|i| {
                        let (a, b, c) = (r1[i], r2[i], r3[i]);
                        [a, b, c, a & b, a & c, b & c, a & b & c]
                    })
                    .collect();
                let s = self.share(&mono);
                append(&mut out, s);
            }
            Request::Bernoulli { epsilon } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::InvalidArgument(format!("epsilon {epsilon}")));
                }
                let y = if self.exploration.bernoulli(epsilon) {
                    self.fx.scale()
                } else {
                    0
                };
                let s = self.share(&[y]);
                append(&mut out, s);
            }
            Request::Uniform { len } => {
                let fx = self.fx;
                let v: Vec<u64> = (0..len).map(|_| self.exploration.uniform_fixed(fx)).collect();
                let s = self.share(&v);
                append(&mut out, s);
            }
            Request::Permutation { n: size } => {
                if size == 0 {
                    return Err(Error::InvalidArgument("permutation of length 0".into()));
                }
                let g = self.exploration.permutation(size);
                let s = self.share(&g);
                append(&mut out, s);
            }
        }
        Ok(out)
    }
}

/// Source of preprocessing items for one party.
pub trait Preprocessing: Send {
    fn next(&mut self, request: &Request) -> Result<Vec<u64>>;

    /// Items taken so far.
    fn consumed(&self) -> usize;
}

struct Item {
    request: Request,
    shares: Vec<Option<Vec<u64>>>,
    remaining: usize,
}

struct DealerState {
    generator: Generator,
    generated: usize,
    live: HashMap<usize, Item>,
    capacity: Option<usize>,
    plan: Option<Vec<Request>>,
}

/// On-demand dealer shared by all parties of one in-process session.
pub struct SharedDealer {
    parties: usize,
    fx: FixedPointConfig,
    seed: u64,
    state: Mutex<DealerState>,
}

impl SharedDealer {
    pub fn new(seed: u64, parties: usize, fx: FixedPointConfig) -> Arc<Self> {
        Arc::new(Self::build(seed, parties, fx, None, false))
    }

    /// Dealer seeded from OS entropy; the seed is available via [`Self::seed`].
    pub fn from_entropy(parties: usize, fx: FixedPointConfig) -> Arc<Self> {
        Self::new(rand::rng().next_u64(), parties, fx)
    }

    /// Dealer that stops with [`Error::Exhausted`] after `items` items.
    pub fn with_capacity(seed: u64, parties: usize, fx: FixedPointConfig, items: usize) -> Arc<Self> {
        Arc::new(Self::build(seed, parties, fx, Some(items), false))
    }

    /// Dealer that also records the request sequence.
    pub fn recording(seed: u64, parties: usize, fx: FixedPointConfig) -> Arc<Self> {
        Arc::new(Self::build(seed, parties, fx, None, true))
    }

    fn build(
        seed: u64,
        parties: usize,
        fx: FixedPointConfig,
        capacity: Option<usize>,
        record: bool,
    ) -> Self {
        SharedDealer {
            parties,
            fx,
            seed,
            state: Mutex::new(DealerState {
                generator: Generator::new(seed, parties, fx),
                generated: 0,
                live: HashMap::new(),
                capacity,
                plan: record.then(Vec::new),
            }),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        self.fx
    }

    pub fn generated(&self) -> usize {
        self.state.lock().unwrap().generated
    }

    /// Recorded request sequence, if recording.
    pub fn plan(&self) -> Option<Vec<Request>> {
        self.state.lock().unwrap().plan.clone()
    }

    /// Hands party `party` its share of item `index`.
    pub fn take(&self, party: usize, index: usize, request: &Request) -> Result<Vec<u64>> {
        if party >= self.parties {
            return Err(Error::Role(format!("party {party} is not served by this dealer")));
        }
        let mut st = self.state.lock().unwrap();
        if index == st.generated {
            if st.capacity.is_some_and(|c| index >= c) {
                return Err(Error::Exhausted(format!(
                    "item {index} requested ({}) beyond capacity",
                    request.name()
                )));
            }
            let shares = st.generator.generate(request)?;
            st.live.insert(
                index,
                Item {
                    request: *request,
                    shares: shares.into_iter().map(Some).collect(),
                    remaining: self.parties,
                },
            );
            st.generated += 1;
            if let Some(plan) = st.plan.as_mut() {
                plan.push(*request);
            }
        } else if index > st.generated {
            return Err(Error::PreprocessingDesync {
                index,
                expected: format!("item {}", st.generated),
                requested: request.describe(),
            });
        }
        let item = st
            .live
            .get_mut(&index)
            .ok_or(Error::AlreadyConsumed { index, party })?;
        if item.request != *request {
            return Err(Error::PreprocessingDesync {
                index,
                expected: item.request.describe(),
                requested: request.describe(),
            });
        }
        let words = item.shares[party]
            .take()
            .ok_or(Error::AlreadyConsumed { index, party })?;
        item.remaining -= 1;
        if item.remaining == 0 {
            st.live.remove(&index);
        }
        Ok(words)
    }

    pub fn handle(self: &Arc<Self>, party: usize) -> DealerHandle {
        DealerHandle {
            dealer: Arc::clone(self),
            party,
            cursor: 0,
        }
    }
}

/// A party's sequential view of a [`SharedDealer`].
pub struct DealerHandle {
    dealer: Arc<SharedDealer>,
    party: usize,
    cursor: usize,
}

impl Preprocessing for DealerHandle {
    fn next(&mut self, request: &Request) -> Result<Vec<u64>> {
        let w = self.dealer.take(self.party, self.cursor, request)?;
        self.cursor += 1;
        Ok(w)
    }

    fn consumed(&self) -> usize {
        self.cursor
    }
}

fn split_parts(words: &[u64], sizes: &[usize]) -> Vec<Vec<u64>> {
    let mut off = 0;
    sizes
        .iter()
        .map(|&s| {
            let p = words[off..off + s].to_vec();
            off += s;
            p
        })
        .collect()
}

fn shares_of(per_party: &[Vec<u64>], shape: Shape, offset: usize) -> Result<Vec<ArithmeticShare>> {
    per_party
        .iter()
        .enumerate()
        .map(|(p, w)| {
            Ok(ArithmeticShare::new(
                p,
                RingTensor::from_u64(shape, w[offset..offset + shape.len()].to_vec())?,
            ))
        })
        .collect()
}

/// Shares of `(a, b, c)` over all parties.
#[derive(Clone, Debug)]
pub struct BeaverTriple {
    pub a: Vec<ArithmeticShare>,
    pub b: Vec<ArithmeticShare>,
    pub c: Vec<ArithmeticShare>,
}

/// Shares of `(a, a^2)` over all parties.
#[derive(Clone, Debug)]
pub struct BeaverSquarePair {
    pub a: Vec<ArithmeticShare>,
    pub b: Vec<ArithmeticShare>,
}

/// Per-party `[r]_p` and `[theta_r]_p`.
#[derive(Clone, Debug)]
pub struct WrapHelper {
    pub r: Vec<RingElement>,
    pub theta: Vec<RingElement>,
}

/// Matrix triples for `(m x k)(k x n)` products.
pub fn generate_triples<R: Rng>(
    count: usize,
    (m, k, n): (usize, usize, usize),
    parties: usize,
    rng: &mut R,
) -> Result<Vec<BeaverTriple>> {
    let mut g = Generator::new(rng.next_u64(), parties, FixedPointConfig::default());
    let req = Request::MatTriple { batch: 1, m, k, n };
    (0..count)
        .map(|_| {
            let w = g.generate(&req)?;
            Ok(BeaverTriple {
                a: shares_of(&w, Shape::matrix(m, k), 0)?,
                b: shares_of(&w, Shape::matrix(k, n), m * k)?,
                c: shares_of(&w, Shape::matrix(m, n), m * k + k * n)?,
            })
        })
        .collect()
}

pub fn generate_square_pairs<R: Rng>(
    count: usize,
    parties: usize,
    rng: &mut R,
) -> Result<BeaverSquarePair> {
    let mut g = Generator::new(rng.next_u64(), parties, FixedPointConfig::default());
    let w = g.generate(&Request::SquarePair { len: count })?;
    Ok(BeaverSquarePair {
        a: shares_of(&w, Shape::vector(count), 0)?,
        b: shares_of(&w, Shape::vector(count), count)?,
    })
}

/// `count` encoded Bernoulli(epsilon) draws as one shared vector.
pub fn generate_bernoulli<R: Rng>(
    epsilon: f64,
    count: usize,
    parties: usize,
    fx: FixedPointConfig,
    rng: &mut R,
) -> Result<Vec<ArithmeticShare>> {
    let mut g = Generator::new(rng.next_u64(), parties, fx);
    let mut per_party = vec![Vec::with_capacity(count); parties];
    for _ in 0..count {
        let w = g.generate(&Request::Bernoulli { epsilon })?;
        for (acc, x) in per_party.iter_mut().zip(w) {
            acc.extend(x);
        }
    }
    shares_of(&per_party, Shape::vector(count), 0)
}

/// `count` encoded uniforms on `[0, 1)`.
pub fn generate_uniform<R: Rng>(
    count: usize,
    parties: usize,
    fx: FixedPointConfig,
    rng: &mut R,
) -> Result<Vec<ArithmeticShare>> {
    let mut g = Generator::new(rng.next_u64(), parties, fx);
    let w = g.generate(&Request::Uniform { len: count })?;
    shares_of(&w, Shape::vector(count), 0)
}

/// Shared permutation of `1..=n` at integer scale.
pub fn generate_permutation<R: Rng>(
    n: usize,
    parties: usize,
    rng: &mut R,
) -> Result<Vec<ArithmeticShare>> {
    let mut g = Generator::new(rng.next_u64(), parties, FixedPointConfig::default());
    let w = g.generate(&Request::Permutation { n })?;
    shares_of(&w, Shape::vector(n), 0)
}

/// One [`WrapHelper`] per party covering `count` values.
pub fn generate_wrap_helpers<R: Rng>(
    count: usize,
    parties: usize,
    rng: &mut R,
) -> Result<Vec<WrapHelper>> {
    let mut g = Generator::new(rng.next_u64(), parties, FixedPointConfig::default());
    let w = g.generate(&Request::WrapHelper { len: count })?;
    Ok(w
        .iter()
        .map(|words| {
            let parts = split_parts(words, &[count, count]);
            WrapHelper {
                r: parts[0].iter().map(|&x| RingElement(x)).collect(),
                theta: parts[1].iter().map(|&x| RingElement(x)).collect(),
            }
        })
        .collect())
}
