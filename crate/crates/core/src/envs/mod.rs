//! Bandit environments and data ingestion.

mod idx;
mod kmeans;
mod mnist;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use idx::{parse_idx, read_idx, IdxArray};
pub use kmeans::{
    build_kmeans_env, kmeans, KMeans, KmeansEnv, SyntheticEnvConfig, DEFAULT_SIGMA,
    KMEANS_MAX_ITERS,
};
pub use mnist::{load_mnist_pca, MnistData, MnistEnv, MnistOptions, Pca, MNIST_CLASSES};

/// A finite stream of contexts with per-arm rewards in `[0, 1]`.
///
/// `reward(t, a)` must be a pure function of `(t, a)` so that a secure run and
/// a plaintext replay observe the same outcomes.
pub trait Environment {
    fn dim(&self) -> usize;
    fn arms(&self) -> usize;
    fn len(&self) -> usize;
    fn context(&self, t: usize) -> &[f64];
    fn reward(&self, t: usize, arm: usize) -> f64;
    fn expected_reward(&self, t: usize, arm: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean expected reward of the uniformly random policy.
    fn uniform_policy_reward(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let a = self.arms();
        let total: f64 = (0..self.len())
            .map(|t| (0..a).map(|arm| self.expected_reward(t, arm)).sum::<f64>() / a as f64)
            .sum();
        total / self.len() as f64
    }
}

/// Labeled feature vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.len())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn example(&self, i: usize) -> ContextExample {
        ContextExample {
            features: self.features[i].clone(),
            label: self.labels[i],
        }
    }
}

/// One context with the metadata needed to score it.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextExample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl ContextExample {
    pub fn split(&self, party_dims: &[usize]) -> Result<Vec<Vec<f64>>> {
        split_features(&self.features, party_dims)
    }
}

/// Contiguous partition of `x` into per-party pieces of the given sizes.
pub fn split_features(x: &[f64], party_dims: &[usize]) -> Result<Vec<Vec<f64>>> {
    let total: usize = party_dims.iter().sum();
    if total != x.len() {
        return Err(Error::Shape(format!(
            "party dims sum to {total}, features have {}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(party_dims.len());
    let mut start = 0;
    for &d in party_dims {
        out.push(x[start..start + d].to_vec());
        start += d;
    }
    Ok(out)
}

/// Near-even contiguous split of `dim` features over `parties`.
pub fn party_dims(dim: usize, parties: usize) -> Vec<usize> {
    (0..parties)
        .map(|p| dim / parties + usize::from(p < dim % parties))
        .collect()
}

pub(crate) fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    order
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `n` unit-norm points around `k` random centers in `dim` dimensions,
/// labeled by center.
pub fn gaussian_blobs(n: usize, k: usize, dim: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        let mut v: Vec<f64> = centers[c]
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + spread * z
            })
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        features.push(v);
        labels.push(c);
    }
    Dataset { features, labels }
}

/// Explicit contexts and reward table; handy for tests and small demos.
#[derive(Clone, Debug)]
pub struct TableEnv {
    pub contexts: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
}

impl TableEnv {
    pub fn new(contexts: Vec<Vec<f64>>, rewards: Vec<Vec<f64>>) -> Result<Self> {
        if contexts.len() != rewards.len() {
            return Err(Error::Shape(format!(
                "{} contexts, {} reward rows",
                contexts.len(),
                rewards.len()
            )));
        }
        if rewards.iter().flatten().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidArgument("rewards must lie in [0, 1]".into()));
        }
        Ok(TableEnv { contexts, rewards })
    }
}

impl Environment for TableEnv {
    fn dim(&self) -> usize {
        self.contexts.first().map_or(0, |c| c.len())
    }

    fn arms(&self) -> usize {
        self.rewards.first().map_or(0, |r| r.len())
    }

    fn len(&self) -> usize {
        self.contexts.len()
    }

    fn context(&self, t: usize) -> &[f64] {
        &self.contexts[t]
    }

    fn reward(&self, t: usize, arm: usize) -> f64 {
        self.rewards[t][arm]
    }

    fn expected_reward(&self, t: usize, arm: usize) -> f64 {
        self.rewards[t][arm]
    }
}

/// The environments selectable from the command line.
#[derive(Clone, Debug)]
pub enum Env {
    Mnist(MnistEnv),
    Synthetic(KmeansEnv),
    Table(TableEnv),
}

macro_rules! delegate {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            Env::Mnist($e) => $body,
            Env::Synthetic($e) => $body,
            Env::Table($e) => $body,
        }
    };
}

impl Environment for Env {
    fn dim(&self) -> usize {
        delegate!(self, e => e.dim())
    }

    fn arms(&self) -> usize {
        delegate!(self, e => e.arms())
    }

    fn len(&self) -> usize {
        delegate!(self, e => e.len())
    }

    fn context(&self, t: usize) -> &[f64] {
        delegate!(self, e => e.context(t))
    }

    fn reward(&self, t: usize, arm: usize) -> f64 {
        delegate!(self, e => e.reward(t, arm))
    }

    fn expected_reward(&self, t: usize, arm: usize) -> f64 {
        delegate!(self, e => e.expected_reward(t, arm))
    }
}
