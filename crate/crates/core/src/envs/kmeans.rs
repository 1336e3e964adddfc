//! Synthetic environment: K-means clusters of a dataset act as arms and
//! rewards are Bernoulli with Gaussian-kernel probabilities.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{shuffled_order, sq_dist, Dataset, Environment};
use crate::error::{Error, Result};

pub const KMEANS_MAX_ITERS: usize = 300;
pub const DEFAULT_SIGMA: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct KMeans {
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl KMeans {
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = sq_dist(c, x);
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

/// Lloyd's algorithm from k-means++ seeding, until assignments stop changing
/// or `max_iters`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-means with k = {k}")));
    }
    if k > points.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {} points", points.len())));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let mut model = KMeans {
        centers,
        iterations: 0,
    };
    let dim = points[0].len();
    let mut assign = vec![usize::MAX; points.len()];
    for it in 0..max_iters {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let n = model.nearest(p);
            changed |= *a != n;
            *a = n;
        }
        model.iterations = it + 1;
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            // an emptied cluster keeps its previous center
            if counts[c] > 0 {
                model.centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(model)
}

/// Arms are cluster centers; `nu_a(x)` is proportional to
/// `exp(-|c_a - x| / (2 sigma))` (unsquared distance), scaled so the best arm
/// for each point has probability 1.
#[derive(Clone, Debug)]
pub struct SyntheticEnvConfig {
    pub centers: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl SyntheticEnvConfig {
    pub fn arms(&self) -> usize {
        self.centers.len()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let dist: Vec<f64> = self.centers.iter().map(|c| sq_dist(c, x).sqrt()).collect();
        let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
        dist.iter().map(|d| (-(d - min) / (2.0 * self.sigma)).exp()).collect()
    }

    /// One Bernoulli(`nu_arm(x)`) draw.
    pub fn sample(&self, x: &[f64], arm: usize, rng: &mut impl RngCore) -> f64 {
        (uniform(rng.next_u64()) < self.probabilities(x)[arm]) as u8 as f64
    }
}

fn uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Seeded sweep over a dataset with K-means arms.
#[derive(Clone, Debug)]
pub struct KmeansEnv {
    config: SyntheticEnvConfig,
    contexts: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    seed: u64,
}

impl KmeansEnv {
    pub fn config(&self) -> &SyntheticEnvConfig {
        &self.config
    }

    /// Reward probabilities at step `t`.
    pub fn probabilities(&self, t: usize) -> &[f64] {
        &self.probs[t]
    }

    /// The uniform draw that decides step `t`'s reward; independent of the arm
    /// so replays are deterministic.
    fn draw(&self, t: usize) -> f64 {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(7);
        rng.set_word_pos(2 * t as u128);
        uniform(rng.next_u64())
    }
}

/// Clusters `data` into `k` arms and streams its points in seeded order.
pub fn build_kmeans_env(
    data: &Dataset,
    k: usize,
    sigma: f64,
    seed: u64,
    limit: Option<usize>,
) -> Result<KmeansEnv> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!("kernel width {sigma}")));
    }
    let model = kmeans(&data.features, k, seed, KMEANS_MAX_ITERS)?;
    let config = SyntheticEnvConfig {
        centers: model.centers,
        sigma,
    };
    let mut order = shuffled_order(data.len(), seed);
    if let Some(l) = limit {
        order.truncate(l);
    }
    let contexts: Vec<Vec<f64>> = order.iter().map(|&i| data.features[i].clone()).collect();
    let probs = contexts.iter().map(|x| config.probabilities(x)).collect();
    Ok(KmeansEnv {
        config,
        contexts,
        probs,
        seed,
    })
}

impl Environment for KmeansEnv {
    fn dim(&self) -> usize {
        self.contexts.first().map_or(0, |c| c.len())
    }

    fn arms(&self) -> usize {
        self.config.arms()
    }

    fn len(&self) -> usize {
        self.contexts.len()
    }

    fn context(&self, t: usize) -> &[f64] {
        &self.contexts[t]
    }

    fn reward(&self, t: usize, arm: usize) -> f64 {
        (self.draw(t) < self.probs[t][arm]) as u8 as f64
    }

    fn expected_reward(&self, t: usize, arm: usize) -> f64 {
        self.probs[t][arm]
    }
}
