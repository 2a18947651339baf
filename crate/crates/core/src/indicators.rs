//! Competing generalization indicators: the heavy-tail (stable) index of the
//! gradient-noise series, the power-law index of weight-matrix spectral
//! densities, and representative norm-based measures.
//!
//! The tail index uses the block log-moment estimator: summing k1 values of
//! an alpha-stable law scales amplitudes by k1^(1/alpha), so the difference
//! between the mean log absolute block sum and the mean log absolute sample,
//! divided by ln k1, estimates 1/alpha. It is scale invariant and caps at 2
//! (the Gaussian case).
//!
//! The power-law index is the continuous maximum-likelihood (Hill-style)
//! fit on the upper tail of the eigenvalue spectrum: for densities
//! proportional to x^(-alpha) above a cutoff, alpha = 1 + k / sum ln(x_i/x_k).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// One dense layer's weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub rows: usize,
    pub cols: usize,
    pub layer_index: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, layer_index: usize, data: Vec<f64>) -> Result<Self> {
        if rows < 1 || cols < 1 {
            return Err(Error::domain("weight matrix needs at least one row and column"));
        }
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("weight entries must be finite"));
        }
        Ok(Self { rows, cols, layer_index, data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// y = W x.
    fn mat_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// y = W^T x.
    fn mat_t_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, &w) in y.iter_mut().zip(row) {
                *yj += w * xi;
            }
        }
    }
}

/// Norm-based measures over a stack of layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormMeasures {
    /// Product of the layers' largest singular values.
    pub spectral_product: f64,
    /// Product of the layers' Frobenius norms.
    pub frobenius_product: f64,
    /// Sum of log largest singular values (overflow-safe form).
    pub spectral_sum_log: f64,
    /// Set when one of the products overflowed; the log form stays valid.
    pub overflowed: bool,
}

/// Indicator values assembled by the analysis pipeline. Individual
/// estimators can fail on degenerate runs, hence the options.
#[derive(Debug, Clone, Default)]
pub struct IndicatorReport {
    pub bg_index: Option<f64>,
    pub power_law_index: Option<f64>,
    pub norms: Option<NormMeasures>,
}

/// Block log-moment estimate of the stable tail index, clamped to (0, 2].
///
/// The series is split into k2 = floor(K / k1) blocks of k1 values; terms
/// with exactly zero magnitude are skipped and more than 20% skipped is an
/// error.
pub fn estimate_bg_index(series: &[f64], k1: usize) -> Result<f64> {
    if k1 < 2 {
        return Err(Error::domain(format!("block size k1 must be at least 2, got {k1}")));
    }
    let k2 = series.len() / k1;
    if k2 < 20 {
        return Err(Error::domain(format!(
            "need at least 20 blocks of size {k1}, series of length {} gives {k2}",
            series.len()
        )));
    }
    let used = &series[..k1 * k2];

    let mut log_abs_sum = 0.0;
    let mut log_abs_count = 0usize;
    for &x in used {
        if x != 0.0 {
            log_abs_sum += x.abs().ln();
            log_abs_count += 1;
        }
    }

    let mut block_sum = 0.0;
    let mut block_count = 0usize;
    for b in 0..k2 {
        let y: f64 = used[b * k1..(b + 1) * k1].iter().sum();
        if y != 0.0 {
            block_sum += y.abs().ln();
            block_count += 1;
        }
    }

    let skipped_x = used.len() - log_abs_count;
    let skipped_y = k2 - block_count;
    if skipped_x * 5 > used.len() || skipped_y * 5 > k2 {
        return Err(Error::estimation(format!(
            "too many zero terms: {skipped_x}/{} samples, {skipped_y}/{k2} blocks",
            used.len()
        )));
    }

    let inv_alpha = (block_sum / block_count as f64 - log_abs_sum / log_abs_count as f64)
        / (k1 as f64).ln();
    if inv_alpha <= 0.0 {
        // Lighter than Gaussian scaling; the index caps at 2.
        return Ok(2.0);
    }
    Ok((1.0 / inv_alpha).min(2.0))
}

/// Eigenvalues of W W^T or W^T W (whichever is smaller), non-negative and
/// descending. Their sum equals the squared Frobenius norm.
pub fn esd_eigenvalues(w: &WeightMatrix) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(w.rows, w.cols, &w.data);
    let gram = if w.rows <= w.cols {
        &m * m.transpose()
    } else {
        m.transpose() * &m
    };
    let eigen = SymmetricEigen::new(gram);
    let mut vals: Vec<f64> = eigen.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    if !vals.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical("eigenvalue computation produced non-finite values"));
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Hill-style power-law exponent of the upper tail: alpha = 1 + k / sum
/// ln(x_i / x_(k+1)) over the top ceil(tail_fraction * count) values.
pub fn power_law_index(eigenvalues: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::domain(format!(
            "tail fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    let mut positive: Vec<f64> = eigenvalues.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.len() < 20 {
        return Err(Error::domain(format!(
            "need at least 20 positive eigenvalues, got {}",
            positive.len()
        )));
    }
    positive.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let k = ((tail_fraction * positive.len() as f64).ceil() as usize)
        .clamp(1, positive.len() - 1);
    let threshold = positive[k];
    let sum: f64 = positive[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::estimation("tail values are all equal; no power law to fit"));
    }
    Ok(1.0 + k as f64 / sum)
}

/// Largest singular value by power iteration on W^T W with a deterministic
/// start vector. Converges when successive Rayleigh quotients differ by
/// less than `tol`.
pub fn spectral_norm(w: &WeightMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut tmp = vec![0.0; w.rows];
    let mut v = vec![0.0; w.cols];
    let mut z = vec![0.0; w.cols];

    // All-ones start; if W annihilates it, fall back to an index ramp and
    // then to basis vectors (if W annihilates every basis vector, W = 0).
    let mut starts: Vec<Vec<f64>> = vec![
        vec![1.0; w.cols],
        (0..w.cols).map(|j| (j + 1) as f64).collect(),
    ];
    starts.extend((0..w.cols).map(|j| {
        let mut e = vec![0.0; w.cols];
        e[j] = 1.0;
        e
    }));

    for start in starts {
        let norm = start.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().zip(&start).for_each(|(vi, s)| *vi = s / norm);

        let mut rho_prev = f64::INFINITY;
        for _ in 0..max_iter {
            w.mat_vec(&v, &mut tmp);
            let rho: f64 = tmp.iter().map(|x| x * x).sum();
            if rho == 0.0 {
                break; // v is in the null space; try the next start vector
            }
            if (rho - rho_prev).abs() < tol {
                return Ok(rho.sqrt());
            }
            rho_prev = rho;
            w.mat_t_vec(&tmp, &mut z);
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().zip(&z).for_each(|(vi, zi)| *vi = zi / norm);
        }
        if rho_prev.is_finite() {
            return Err(Error::numerical(format!(
                "power iteration did not converge in {max_iter} iterations; last sigma = {}",
                rho_prev.sqrt()
            )));
        }
    }
    Ok(0.0)
}

/// Spectral and Frobenius norm products plus the overflow-safe log form.
pub fn norm_measures(layers: &[WeightMatrix]) -> Result<NormMeasures> {
    if layers.is_empty() {
        return Err(Error::domain("need at least one layer"));
    }
    let mut spectral_product = 1.0;
    let mut frobenius_product = 1.0;
    let mut spectral_sum_log = 0.0;
    for layer in layers {
        let sigma = spectral_norm(layer, 1e-8, 10_000)?;
        spectral_product *= sigma;
        frobenius_product *= layer.frobenius_norm();
        spectral_sum_log += sigma.ln();
    }
    let overflowed = !spectral_product.is_finite() || !frobenius_product.is_finite();
    Ok(NormMeasures {
        spectral_product,
        frobenius_product,
        spectral_sum_log,
        overflowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> WeightMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        WeightMatrix::new(n, n, 0, data).unwrap()
    }

    #[test]
    fn esd_of_identity() {
        let vals = esd_eigenvalues(&identity(3)).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn esd_of_diagonal_is_squared_singular_values() {
        let w = WeightMatrix::new(2, 2, 0, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let vals = esd_eigenvalues(&w).unwrap();
        assert!((vals[0] - 9.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn esd_sum_matches_frobenius() {
        let data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = WeightMatrix::new(3, 4, 0, data).unwrap();
        let sum: f64 = esd_eigenvalues(&w).unwrap().iter().sum();
        let fro2 = w.frobenius_norm().powi(2);
        assert!((sum - fro2).abs() < 1e-8 * fro2);
    }

    #[test]
    fn spectral_norm_of_identity_and_diagonal() {
        assert!((spectral_norm(&identity(4), 1e-10, 1000).unwrap() - 1.0).abs() < 1e-8);
        let w = WeightMatrix::new(2, 2, 0, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((spectral_norm(&w, 1e-10, 1000).unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_of_rank_one_outer_product() {
        // u v^T with |u| = 2, |v| = 5 has sigma_1 = 10.
        let u = [1.2, -1.6];
        let v = [3.0, -4.0];
        let data: Vec<f64> = u.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect();
        let w = WeightMatrix::new(2, 2, 0, data).unwrap();
        assert!((spectral_norm(&w, 1e-10, 1000).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn spectral_norm_survives_null_start() {
        // W (1,1) = 0, so the all-ones start needs the fallback.
        let w = WeightMatrix::new(1, 2, 0, vec![1.0, -1.0]).unwrap();
        let sigma = spectral_norm(&w, 1e-12, 1000).unwrap();
        assert!((sigma - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let w = WeightMatrix::new(2, 3, 0, vec![0.0; 6]).unwrap();
        assert_eq!(spectral_norm(&w, 1e-10, 100).unwrap(), 0.0);
    }

    #[test]
    fn norm_measures_on_identity_layer() {
        let layers = [identity(3)];
        let m = norm_measures(&layers).unwrap();
        assert!((m.spectral_product - 1.0).abs() < 1e-8);
        assert!((m.frobenius_product - 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn norm_measures_products_and_logs() {
        let a = WeightMatrix::new(2, 2, 0, vec![2.0, 0.0, 0.0, 2.0]).unwrap();
        let b = WeightMatrix::new(2, 2, 1, vec![3.0, 0.0, 0.0, 3.0]).unwrap();
        let m = norm_measures(&[a, b]).unwrap();
        assert!((m.spectral_product - 6.0).abs() < 1e-7);

        let ten: Vec<WeightMatrix> = (0..10)
            .map(|i| WeightMatrix::new(2, 2, i, vec![2.0, 0.0, 0.0, 1.0]).unwrap())
            .collect();
        let m = norm_measures(&ten).unwrap();
        assert!((m.spectral_sum_log - 10.0 * 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn bg_index_needs_enough_blocks() {
        let series = vec![1.0; 100];
        assert!(matches!(estimate_bg_index(&series, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn hill_rejects_flat_tails() {
        let vals = vec![2.0; 40];
        assert!(matches!(power_law_index(&vals, 0.1), Err(Error::Estimation(_))));
    }

    #[test]
    fn hill_rejects_tiny_spectra() {
        let vals = vec![1.0, 2.0, 3.0];
        assert!(matches!(power_law_index(&vals, 0.1), Err(Error::Domain(_))));
    }
}
