//! Box-counting dimension estimation for point clouds.
//!
//! N(delta) counts occupied cells of the axis-aligned grid with side `delta`
//! anchored at the cloud's coordinate-wise minimum; the dimension estimate is
//! the slope of log N against log(1/delta) over a geometric scale ladder.
//! Grid covering overestimates the minimal covering number by at most a
//! dimension-dependent constant, which cancels in the log-log slope.
//!
//! Cells are stored as hashed integer tuples, so the cost per scale is O(n)
//! regardless of the ambient dimension. In very high dimension (d > 64) the
//! count itself is meaningless, so the auto estimator first applies a seeded
//! random orthogonal projection to 16 coordinates; the image dimension
//! min(d, 1/H) of the trajectories this crate cares about survives any
//! projection to more than 1/H dimensions.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::PointCloud;

/// Dimension above which the auto estimator projects before counting.
pub const PROJECTION_THRESHOLD: usize = 64;

/// Target dimension of the automatic projection.
pub const PROJECTION_DIM: usize = 16;

/// Seed used when the auto estimator has to project and no seed was given.
pub const DEFAULT_PROJECTION_SEED: u64 = 0xB0C5;

/// Fraction of the point count above which a scale is considered saturated
/// (boxes resolve individual samples rather than the underlying set).
const SATURATION_FRACTION: f64 = 0.25;

/// Box-counting fit result.
#[derive(Debug, Clone)]
pub struct BoxDimEstimate {
    /// Slope of log N over log(1/delta).
    pub dim_hat: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    /// (delta, occupied cells) pairs that entered the fit, ascending delta.
    pub scales: Vec<(f64, usize)>,
    /// Seed of the orthogonal projection, when one was applied.
    pub projection_seed: Option<u64>,
}

/// Number of occupied grid cells at side `delta`, grid anchored at the
/// coordinate-wise minimum of the cloud.
pub fn box_count(cloud: &PointCloud, delta: f64) -> Result<usize> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    let min = cloud.min_corner();
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    for p in cloud.iter() {
        let cell: Vec<i64> = p
            .iter()
            .zip(&min)
            .map(|(x, lo)| ((x - lo) / delta).floor() as i64)
            .collect();
        cells.insert(cell);
    }
    Ok(cells.len())
}

/// Fits the box-counting dimension over a geometric delta ladder between
/// `delta_min` and `delta_max` (`n_scales` points, default 12).
pub fn estimate_boxdim(
    cloud: &PointCloud,
    delta_min: f64,
    delta_max: f64,
    n_scales: usize,
) -> Result<BoxDimEstimate> {
    if cloud.len() < 2 {
        return Err(Error::domain("box-counting needs at least 2 points"));
    }
    let extent = bounding_diagonal(cloud);
    if extent == 0.0 {
        return Err(Error::domain("cloud has zero extent"));
    }
    if !(delta_min > 0.0 && delta_min < delta_max) {
        return Err(Error::domain(format!(
            "need 0 < delta_min < delta_max, got [{delta_min}, {delta_max}]"
        )));
    }
    if delta_max > extent {
        return Err(Error::domain(format!(
            "delta_max {delta_max} exceeds the cloud extent {extent}"
        )));
    }
    if n_scales < 3 {
        return Err(Error::domain("need at least 3 scales"));
    }

    let deltas = geometric_ladder(delta_min, delta_max, n_scales);
    let counts: Vec<usize> = deltas
        .par_iter()
        .map(|&d| box_count(cloud, d).expect("delta validated"))
        .collect();
    let scales: Vec<(f64, usize)> = deltas.into_iter().zip(counts).collect();
    fit_scales(scales, None)
}

/// Box-counting with the automatic scale ladder: deltas in
/// [0.001, 0.1] x (largest coordinate extent), scales where the count
/// saturates against the sample size dropped, and a seeded orthogonal
/// projection to 16 coordinates first when the ambient dimension exceeds 64.
pub fn estimate_boxdim_auto(cloud: &PointCloud, n_scales: usize) -> Result<BoxDimEstimate> {
    estimate_boxdim_auto_seeded(cloud, n_scales, DEFAULT_PROJECTION_SEED)
}

pub fn estimate_boxdim_auto_seeded(
    cloud: &PointCloud,
    n_scales: usize,
    projection_seed: u64,
) -> Result<BoxDimEstimate> {
    if cloud.len() < 2 {
        return Err(Error::domain("box-counting needs at least 2 points"));
    }
    let (working, seed) = if cloud.dim() > PROJECTION_THRESHOLD {
        (
            project_cloud(cloud, PROJECTION_DIM, projection_seed)?,
            Some(projection_seed),
        )
    } else {
        (cloud.clone(), None)
    };

    let extent = working.max_extent();
    if extent == 0.0 {
        return Err(Error::domain("cloud has zero extent"));
    }
    if n_scales < 3 {
        return Err(Error::domain("need at least 3 scales"));
    }
    let deltas = geometric_ladder(1e-3 * extent, 0.1 * extent, n_scales);
    let counts: Vec<usize> = deltas
        .par_iter()
        .map(|&d| box_count(&working, d).expect("delta validated"))
        .collect();
    let all: Vec<(f64, usize)> = deltas.into_iter().zip(counts).collect();

    // Drop scales where boxes resolve individual samples; keep at least 4.
    let cap = (SATURATION_FRACTION * working.len() as f64).ceil() as usize;
    let unsaturated: Vec<(f64, usize)> =
        all.iter().copied().filter(|&(_, n)| n <= cap).collect();
    let scales = if unsaturated.len() >= 4 { unsaturated } else { all };
    fit_scales(scales, seed)
}

/// Projects the cloud onto `target_dim` random orthonormal directions.
pub fn project_cloud(cloud: &PointCloud, target_dim: usize, seed: u64) -> Result<PointCloud> {
    let d = cloud.dim();
    if target_dim < 1 || target_dim > d {
        return Err(Error::domain(format!(
            "projection dimension {target_dim} out of range for d={d}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Gram-Schmidt on Gaussian columns.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(target_dim);
    while basis.len() < target_dim {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }

    let mut data = Vec::with_capacity(cloud.len() * target_dim);
    for p in cloud.iter() {
        for b in &basis {
            data.push(p.iter().zip(b).map(|(x, y)| x * y).sum());
        }
    }
    PointCloud::new(cloud.len(), target_dim, data)
}

fn geometric_ladder(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let ratio = (hi / lo).powf(1.0 / (k - 1) as f64);
    (0..k).map(|i| lo * ratio.powi(i as i32)).collect()
}

fn bounding_diagonal(cloud: &PointCloud) -> f64 {
    let min = cloud.min_corner();
    let mut max = min.clone();
    for p in cloud.iter() {
        for (m, &x) in max.iter_mut().zip(p) {
            if x > *m {
                *m = x;
            }
        }
    }
    min.iter()
        .zip(&max)
        .map(|(lo, hi)| (hi - lo) * (hi - lo))
        .sum::<f64>()
        .sqrt()
}

fn fit_scales(scales: Vec<(f64, usize)>, projection_seed: Option<u64>) -> Result<BoxDimEstimate> {
    let all_one = scales.iter().all(|&(_, n)| n == 1);
    if all_one {
        return Err(Error::estimation(
            "every scale maps the cloud into a single cell; shrink delta_min",
        ));
    }
    let first = scales[0].1;
    if scales.iter().all(|&(_, n)| n == first) {
        // A resolved finite set: constant count, dimension zero.
        return Ok(BoxDimEstimate {
            dim_hat: 0.0,
            r_squared: 1.0,
            scales,
            projection_seed,
        });
    }

    let xs: Vec<f64> = scales.iter().map(|&(d, _)| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = scales.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(BoxDimEstimate {
        dim_hat: slope,
        r_squared,
        scales,
        projection_seed,
    })
}
