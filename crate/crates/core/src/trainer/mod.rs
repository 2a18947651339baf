//! Self-contained MLP + SGD trainer that records the measurement series the
//! analysis pipeline consumes: gradient coordinates at a fixed random subset
//! every iteration, full per-example loss vectors at a stride, the final
//! weights, and accuracies.
//!
//! Mini-batch indices are drawn i.i.d. uniformly with replacement. Training
//! stops when an exponential moving average (decay 0.99) of the mini-batch
//! loss crosses `stop_loss` and a full-pass evaluation confirms it, or at
//! `max_iters`.

pub mod data;
pub mod mlp;

pub use data::{make_dataset, Dataset, DatasetKind};
pub use mlp::{Activation, Mlp, MlpSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::indicators::WeightMatrix;
use crate::series::{SeriesKind, SeriesMatrix};

/// Loss level treated as divergence.
const DIVERGENCE_LOSS: f64 = 1e4;

/// Decay of the stopping-rule moving average.
const EMA_DECAY: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Training stops once the (confirmed) running training loss reaches this.
    pub stop_loss: f64,
    pub max_iters: usize,
    pub data_seed: u64,
    pub shuffle_seed: u64,
    /// Per-example loss vectors are logged every this many iterations.
    pub loss_log_stride: usize,
    /// Number of gradient coordinates logged per iteration.
    pub sgn_coord_count: usize,
    /// Retain per-iteration batch indices (debug / recomputation tests).
    pub log_batches: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            batch_size: 64,
            momentum: 0.0,
            weight_decay: 0.0,
            stop_loss: 0.01,
            max_iters: 100_000,
            data_seed: 1,
            shuffle_seed: 2,
            loss_log_stride: 10,
            sgn_coord_count: 32,
            log_batches: false,
        }
    }
}

/// Everything a training run emits.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// K x c gradient coordinates, one row per iteration.
    pub sgn: SeriesMatrix,
    /// Per-example loss vectors; first row at initialization, last row at
    /// the final parameters, rows in between every `loss_log_stride` steps.
    pub loss_vectors: SeriesMatrix,
    pub weights: Vec<WeightMatrix>,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Mean of the final loss vector.
    pub empirical_risk: f64,
    /// Max entry over all logged loss vectors.
    pub zeta_observed: f64,
    /// Number of SGD iterations executed.
    pub iters: usize,
    /// The fixed coordinate subset the SGN rows sample.
    pub sgn_coords: Vec<usize>,
    pub batch_indices: Option<Vec<Vec<usize>>>,
}

/// Training accuracy minus test accuracy.
pub fn generalization_gap(log: &TrainLog) -> f64 {
    log.train_acc - log.test_acc
}

/// Runs SGD with optional momentum and weight decay:
/// v <- momentum * v + g; w <- w - lr * (v + weight_decay * w).
pub fn train(
    spec: &MlpSpec,
    config: &TrainConfig,
    train_data: &Dataset,
    test_data: &Dataset,
) -> Result<TrainLog> {
    if config.batch_size < 1 || config.batch_size > train_data.len() {
        return Err(Error::domain(format!(
            "batch size {} out of range for m = {}",
            config.batch_size,
            train_data.len()
        )));
    }
    if !(config.lr.is_finite() && config.lr >= 0.0) {
        return Err(Error::domain(format!("learning rate must be >= 0, got {}", config.lr)));
    }
    if !(0.0..1.0).contains(&config.momentum) {
        return Err(Error::domain(format!(
            "momentum must lie in [0, 1), got {}",
            config.momentum
        )));
    }
    if config.weight_decay < 0.0 {
        return Err(Error::domain("weight decay must be >= 0"));
    }
    if config.loss_log_stride < 1 || config.sgn_coord_count < 1 {
        return Err(Error::domain("stride and coordinate count must be positive"));
    }
    if spec.layer_sizes[0] != train_data.dim()
        || *spec.layer_sizes.last().unwrap() < train_data.classes
    {
        return Err(Error::domain(format!(
            "network {:?} does not fit data with dim {} and {} classes",
            spec.layer_sizes,
            train_data.dim(),
            train_data.classes
        )));
    }

    let mut mlp = Mlp::init(spec)?;
    let d = mlp.param_count();
    let m = train_data.len();
    let all_indices: Vec<usize> = (0..m).collect();

    let mut rng = ChaCha12Rng::seed_from_u64(config.shuffle_seed);
    let sgn_coords = draw_coordinate_subset(d, config.sgn_coord_count.min(d), &mut rng);

    let mut sgn_rows: Vec<f64> = Vec::new();
    let mut loss_rows: Vec<f64> = Vec::new();
    let mut n_loss_rows = 0usize;
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut velocity = vec![0.0; d];
    let mut ema: Option<f64> = None;
    let mut iters = 0usize;

    for k in 0..config.max_iters {
        if k % config.loss_log_stride == 0 {
            let (losses, _) = mlp.forward_loss(train_data, &all_indices)?;
            loss_rows.extend_from_slice(&losses);
            n_loss_rows += 1;
        }

        let batch: Vec<usize> = (0..config.batch_size).map(|_| rng.gen_range(0..m)).collect();
        let (grad, batch_loss) = mlp.grad(train_data, &batch)?;
        if batch_loss > DIVERGENCE_LOSS {
            return Err(Error::Training {
                iter: k,
                msg: format!("batch loss {batch_loss:.3e} exceeds {DIVERGENCE_LOSS:e}"),
            });
        }

        for &c in &sgn_coords {
            sgn_rows.push(grad[c]);
        }
        if config.log_batches {
            batches.push(batch);
        }

        let params = mlp.params_mut();
        for i in 0..d {
            velocity[i] = config.momentum * velocity[i] + grad[i];
            params[i] -= config.lr * (velocity[i] + config.weight_decay * params[i]);
        }
        iters = k + 1;

        let e = match ema {
            None => batch_loss,
            Some(prev) => EMA_DECAY * prev + (1.0 - EMA_DECAY) * batch_loss,
        };
        ema = Some(e);

        // The moving average is a noisy surrogate; confirm on the full split
        // before stopping. At least two iterations so the series matrices
        // are well-formed.
        if e <= config.stop_loss && iters >= 2 {
            let (losses, _) = mlp.forward_loss(train_data, &all_indices)?;
            let full = losses.iter().sum::<f64>() / m as f64;
            if full <= config.stop_loss {
                break;
            }
            ema = Some(full);
        }
    }

    // Final loss vector at the final parameters.
    let (final_losses, _) = mlp.forward_loss(train_data, &all_indices)?;
    let empirical_risk = final_losses.iter().sum::<f64>() / m as f64;
    loss_rows.extend_from_slice(&final_losses);
    n_loss_rows += 1;

    let zeta_observed = loss_rows.iter().fold(0.0f64, |a, &b| a.max(b));
    let sgn = SeriesMatrix::new(iters, sgn_coords.len(), sgn_rows, SeriesKind::Sgn)?;
    let loss_vectors = SeriesMatrix::new(n_loss_rows, m, loss_rows, SeriesKind::LossVectors)?;

    Ok(TrainLog {
        sgn,
        loss_vectors,
        weights: mlp.weight_matrices(),
        train_acc: mlp.accuracy(train_data),
        test_acc: mlp.accuracy(test_data),
        empirical_risk,
        zeta_observed,
        iters,
        sgn_coords,
        batch_indices: if config.log_batches { Some(batches) } else { None },
    })
}

/// Draws `count` distinct coordinates of [0, d), ascending.
fn draw_coordinate_subset(d: usize, count: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..count {
        let j = rng.gen_range(i..d);
        idx.swap(i, j);
    }
    let mut chosen = idx[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(m: usize, separation: f64, seed: u64) -> (Dataset, Dataset) {
        make_dataset(
            DatasetKind::GaussianBlobs { classes: 2, dim: 2, separation },
            m,
            m,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let (train_data, test_data) = blobs(32, 4.0, 5);
        let spec = MlpSpec::new(vec![2, 8, 2], 3).unwrap();
        let config = TrainConfig {
            lr: 0.0,
            batch_size: 8,
            max_iters: 20,
            stop_loss: 0.0,
            sgn_coord_count: 4,
            ..TrainConfig::default()
        };
        let log = train(&spec, &config, &train_data, &test_data).unwrap();
        let fresh = Mlp::init(&spec).unwrap();
        assert_eq!(log.weights, fresh.weight_matrices());
        assert_eq!(log.iters, 20);
    }

    #[test]
    fn deterministic_reproduction() {
        let (train_data, test_data) = blobs(48, 3.0, 11);
        let spec = MlpSpec::new(vec![2, 8, 2], 21).unwrap();
        let config = TrainConfig {
            lr: 0.05,
            batch_size: 8,
            max_iters: 60,
            stop_loss: 1e-6,
            sgn_coord_count: 6,
            ..TrainConfig::default()
        };
        let a = train(&spec, &config, &train_data, &test_data).unwrap();
        let b = train(&spec, &config, &train_data, &test_data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_size_larger_than_m_is_rejected() {
        let (train_data, test_data) = blobs(8, 3.0, 1);
        let spec = MlpSpec::new(vec![2, 4, 2], 1).unwrap();
        let config = TrainConfig { batch_size: 16, ..TrainConfig::default() };
        assert!(train(&spec, &config, &train_data, &test_data).is_err());
    }

    #[test]
    fn gap_is_accuracy_difference() {
        let log_like = |train_acc: f64, test_acc: f64| {
            let sgn = SeriesMatrix::new(2, 1, vec![0.1, 0.2], SeriesKind::Sgn).unwrap();
            let lv =
                SeriesMatrix::new(2, 1, vec![0.3, 0.4], SeriesKind::LossVectors).unwrap();
            TrainLog {
                sgn,
                loss_vectors: lv,
                weights: Vec::new(),
                train_acc,
                test_acc,
                empirical_risk: 0.0,
                zeta_observed: 1.0,
                iters: 2,
                sgn_coords: vec![0],
                batch_indices: None,
            }
        };
        assert!((generalization_gap(&log_like(1.0, 0.9)) - 0.1).abs() < 1e-12);
        assert_eq!(generalization_gap(&log_like(0.7, 0.7)), 0.0);
    }
}
