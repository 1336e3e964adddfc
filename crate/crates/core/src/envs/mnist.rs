//! MNIST digits projected on their leading principal components.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};

use super::idx::{read_idx, IdxArray};
use super::{shuffled_order, Dataset, Environment};
use crate::error::{Error, Result};

pub const MNIST_CLASSES: usize = 10;

const PCA_MAGIC: &[u8; 8] = b"MPCPCA\0\0";
const PCA_VERSION: u32 = 1;

/// Principal-component projection (no whitening).
#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `components[i]` is the i-th unit eigenvector, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Share of the total variance captured by `components`.
    pub explained_variance_ratio: f64,
}

impl Pca {
    /// Fits on `rows` (row-major, `n` rows of length `dim`).
    pub fn fit(rows: &[f64], dim: usize, k: usize) -> Result<Pca> {
        if dim == 0 || !rows.len().is_multiple_of(dim) || rows.is_empty() {
            return Err(Error::Shape(format!("{} values with row length {dim}", rows.len())));
        }
        if k == 0 || k > dim {
            return Err(Error::InvalidArgument(format!(
                "{k} components for {dim}-dimensional data"
            )));
        }
        let n = rows.len() / dim;
        let mut x = DMatrix::from_row_slice(n, dim, rows);
        let mean: Vec<f64> = (0..dim).map(|j| x.column(j).mean()).collect();
        for (j, m) in mean.iter().enumerate() {
            x.column_mut(j).add_scalar_mut(-m);
        }
        let cov = (x.transpose() * &x) / n as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let kept: f64 = order[..k].iter().map(|&i| eig.eigenvalues[i].max(0.0)).sum();
        let components = order[..k]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                // fix the sign so the projection is reproducible
                let pivot = v.iter().copied().fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
                if pivot < 0.0 {
                    v.iter_mut().for_each(|a| *a = -*a);
                }
                v
            })
            .collect();
        Ok(Pca {
            mean,
            components,
            explained_variance_ratio: if total > 0.0 { kept / total } else { 0.0 },
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }

    /// Serializes with a fingerprint of the data it was fitted on.
    pub fn to_bytes(&self, fingerprint: &[u8; 32]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PCA_MAGIC);
        out.extend_from_slice(&PCA_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        out.extend_from_slice(fingerprint);
        out.extend_from_slice(&self.explained_variance_ratio.to_le_bytes());
        for v in self.mean.iter().chain(self.components.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Returns `None` for another version, shape or fingerprint.
    pub fn from_bytes(b: &[u8], fingerprint: &[u8; 32], k: usize) -> Option<Pca> {
        let head = 8 + 12 + 32 + 8;
        if b.len() < head || &b[..8] != PCA_MAGIC {
            return None;
        }
        let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap()) as usize;
        if word(8) != PCA_VERSION as usize || word(16) != k || &b[20..52] != fingerprint {
            return None;
        }
        let dim = word(12);
        if b.len() != head + 8 * dim * (k + 1) {
            return None;
        }
        let f = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let vals: Vec<f64> = (0..dim * (k + 1)).map(|i| f(head + 8 * i)).collect();
        Some(Pca {
            explained_variance_ratio: f(52),
            mean: vals[..dim].to_vec(),
            components: vals[dim..].chunks(dim).map(|c| c.to_vec()).collect(),
        })
    }
}

/// Train and held-out MNIST, projected and unit-normalized.
#[derive(Clone, Debug)]
pub struct MnistData {
    pub train: Dataset,
    pub test: Dataset,
    pub pca: Pca,
}

#[derive(Clone, Debug)]
pub struct MnistOptions {
    pub components: usize,
    /// Versioned PCA cache; refitted when missing or stale.
    pub cache: Option<PathBuf>,
}

impl Default for MnistOptions {
    fn default() -> Self {
        MnistOptions {
            components: 20,
            cache: None,
        }
    }
}

fn images_to_f64(a: &IdxArray) -> Vec<f64> {
    a.data.iter().map(|&p| p as f64 / 255.0).collect()
}

fn labels_of(a: &IdxArray, images: &IdxArray) -> Result<Vec<usize>> {
    if a.dims.len() != 1 || a.items() != images.items() {
        return Err(Error::Format(format!(
            "{} labels for {} images",
            a.items(),
            images.items()
        )));
    }
    if let Some(bad) = a.data.iter().find(|&&l| l as usize >= MNIST_CLASSES) {
        return Err(Error::Format(format!("label {bad} out of range")));
    }
    Ok(a.data.iter().map(|&l| l as usize).collect())
}

fn project_all(pca: &Pca, pixels: &[f64], labels: Vec<usize>) -> Dataset {
    let features = pixels
        .chunks(pca.dim())
        .map(|row| {
            let mut v = pca.project(row);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|a| *a /= norm);
            }
            v
        })
        .collect();
    Dataset { features, labels }
}

/// Loads `train-*` and `t10k-*` IDX files from `dir`, fits PCA on the
/// training images and projects both sets.
pub fn load_mnist_pca(dir: &Path, opts: &MnistOptions) -> Result<MnistData> {
    let train_img = read_idx(&dir.join("train-images-idx3-ubyte"))?;
    let train_lab = read_idx(&dir.join("train-labels-idx1-ubyte"))?;
    let test_img = read_idx(&dir.join("t10k-images-idx3-ubyte"))?;
    let test_lab = read_idx(&dir.join("t10k-labels-idx1-ubyte"))?;
    if train_img.dims.len() != 3 || test_img.item_len() != train_img.item_len() {
        return Err(Error::Format("image files must be N x rows x cols and agree".into()));
    }
    let dim = train_img.item_len();
    if opts.components == 0 || opts.components > dim {
        return Err(Error::InvalidArgument(format!(
            "{} components for {dim} pixels",
            opts.components
        )));
    }
    let train_labels = labels_of(&train_lab, &train_img)?;
    let test_labels = labels_of(&test_lab, &test_img)?;
    let fingerprint: [u8; 32] = Sha256::digest(&train_img.data).into();
    let train_px = images_to_f64(&train_img);
    let cached = opts
        .cache
        .as_ref()
        .and_then(|p| fs::read(p).ok())
        .and_then(|b| Pca::from_bytes(&b, &fingerprint, opts.components));
    let pca = match cached {
        Some(p) => p,
        None => {
            let p = Pca::fit(&train_px, dim, opts.components)?;
            if let Some(path) = &opts.cache {
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(path, p.to_bytes(&fingerprint))?;
            }
            p
        }
    };
    Ok(MnistData {
        train: project_all(&pca, &train_px, train_labels),
        test: project_all(&pca, &images_to_f64(&test_img), test_labels),
        pca,
    })
}

/// Digit classification as a bandit: one arm per class, reward 1 iff the
/// chosen arm is the label. A seeded single sweep over the examples.
#[derive(Clone, Debug)]
pub struct MnistEnv {
    data: Dataset,
}

impl MnistEnv {
    /// Visits `data` once in seeded random order, truncated to `limit`.
    pub fn new(data: &Dataset, seed: u64, limit: Option<usize>) -> Self {
        let mut order = shuffled_order(data.len(), seed);
        if let Some(l) = limit {
            order.truncate(l);
        }
        MnistEnv {
            data: data.subset(&order),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

impl Environment for MnistEnv {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn arms(&self) -> usize {
        MNIST_CLASSES
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn context(&self, t: usize) -> &[f64] {
        &self.data.features[t]
    }

    fn reward(&self, t: usize, arm: usize) -> f64 {
        (self.data.labels[t] == arm) as u8 as f64
    }

    fn expected_reward(&self, t: usize, arm: usize) -> f64 {
        self.reward(t, arm)
    }
}
