//! Synthetic labeled datasets at desk scale.
//!
//! Features are standardized to zero mean and unit variance per coordinate
//! using training-split statistics, which are then reused on the test split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetKind {
    /// Gaussian class clusters with centers `separation` apart along
    /// coordinate axes; unit isotropic noise.
    GaussianBlobs {
        classes: usize,
        dim: usize,
        separation: f64,
    },
    /// Two concentric noisy rings in the plane.
    TwoRings,
}

/// Labeled dataset with flat row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n: usize,
    dim: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn from_raw(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if labels.is_empty() || features.len() != labels.len() * dim {
            return Err(Error::domain("feature/label shape mismatch"));
        }
        Ok(Self {
            n: labels.len(),
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Replaces the labels with a seeded shuffle of themselves
    /// (memorization experiments).
    pub fn shuffle_labels(&mut self, seed: u64) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.labels.shuffle(&mut rng);
    }
}

/// Deterministic train/test pair; labels cycle through the classes so every
/// class is present whenever m >= classes.
pub fn make_dataset(
    kind: DatasetKind,
    m_train: usize,
    m_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if m_train < 1 || m_test < 1 {
        return Err(Error::domain("need at least one training and one test example"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (mut train, mut test) = match kind {
        DatasetKind::GaussianBlobs { classes, dim, separation } => {
            if !(separation > 0.0) {
                return Err(Error::domain(format!(
                    "separation must be positive, got {separation}"
                )));
            }
            if classes < 2 {
                return Err(Error::domain("need at least 2 classes"));
            }
            if classes > 2 * dim {
                return Err(Error::domain(format!(
                    "axis placement supports at most 2*dim = {} classes",
                    2 * dim
                )));
            }
            let blobs = |m: usize, rng: &mut ChaCha12Rng| -> Dataset {
                let mut features = Vec::with_capacity(m * dim);
                let mut labels = Vec::with_capacity(m);
                for j in 0..m {
                    let class = j % classes;
                    let axis = class / 2;
                    let sign = if class % 2 == 0 { 1.0 } else { -1.0 };
                    for c in 0..dim {
                        let center = if c == axis { sign * separation / 2.0 } else { 0.0 };
                        let z: f64 = StandardNormal.sample(rng);
                        features.push(center + z);
                    }
                    labels.push(class);
                }
                Dataset { features, labels, n: m, dim, classes }
            };
            let train = blobs(m_train, &mut rng);
            let test = blobs(m_test, &mut rng);
            (train, test)
        }
        DatasetKind::TwoRings => {
            let rings = |m: usize, rng: &mut ChaCha12Rng| -> Dataset {
                let mut features = Vec::with_capacity(m * 2);
                let mut labels = Vec::with_capacity(m);
                for j in 0..m {
                    let class = j % 2;
                    let radius = if class == 0 { 1.0 } else { 2.0 };
                    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                    let nx: f64 = StandardNormal.sample(rng);
                    let ny: f64 = StandardNormal.sample(rng);
                    features.push(radius * theta.cos() + 0.1 * nx);
                    features.push(radius * theta.sin() + 0.1 * ny);
                    labels.push(class);
                }
                Dataset { features, labels, n: m, dim: 2, classes: 2 }
            };
            let train = rings(m_train, &mut rng);
            let test = rings(m_test, &mut rng);
            (train, test)
        }
    };

    standardize(&mut train, &mut test);
    Ok((train, test))
}

/// Zero mean, unit variance per coordinate from the training split.
fn standardize(train: &mut Dataset, test: &mut Dataset) {
    let dim = train.dim;
    let n = train.n as f64;
    let mut mean = vec![0.0; dim];
    let mut var = vec![0.0; dim];
    for i in 0..train.n {
        for (c, &x) in mean.iter_mut().zip(train.features(i)) {
            *c += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    for i in 0..train.n {
        for c in 0..dim {
            let d = train.features[i * dim + c] - mean[c];
            var[c] += d * d;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();

    for ds in [train, test] {
        for i in 0..ds.n {
            for c in 0..dim {
                ds.features[i * dim + c] = (ds.features[i * dim + c] - mean[c]) / std[c];
            }
        }
    }
}
