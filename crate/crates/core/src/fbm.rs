//! Fractional Gaussian noise and fractional Brownian motion sampling.
//!
//! Fractional Brownian motion (fBm) is the centered Gaussian process with
//! covariance
//!
//! ```text
//! E[B_t B_s] = 1/2 (t^{2H} + s^{2H} - |t-s|^{2H}),   0 < H < 1,
//! ```
//!
//! and fractional Gaussian noise (fGn) is its stationary unit-step increment
//! process with autocovariance
//!
//! ```text
//! gamma(k) = 1/2 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
//! ```
//!
//! Three samplers are provided. Davies–Harte embeds the Toeplitz covariance in
//! a circulant matrix and diagonalizes it with an FFT (O(n log n), exact in
//! distribution; the embedding eigenvalues are non-negative for fGn at every
//! H in (0,1)). Hosking draws the sequence recursively through the
//! Durbin–Levinson conditional means, and Cholesky multiplies innovations by
//! the lower-triangular factor of the covariance. Hosking and Cholesky apply
//! the same unique triangular transform, so they coincide elementwise under
//! shared innovations and serve as O(n^2)/O(n^3) oracles for the fast path.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::series::PointCloud;

/// Negative circulant eigenvalues beyond this tolerance signal a covariance bug.
const EIGENVALUE_TOLERANCE: f64 = -1e-10;

/// Hurst parameter, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0 && value < 1.0) {
            return Err(Error::domain(format!(
                "Hurst parameter must lie strictly in (0, 1), got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Sampling algorithm for fractional Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgnMethod {
    /// Circulant embedding, O(n log n). Default.
    DaviesHarte,
    /// Durbin–Levinson recursion, O(n^2).
    Hosking,
    /// Dense lower-triangular factorization, O(n^3).
    Cholesky,
}

impl FgnMethod {
    /// Number of standard-normal innovations one sample of length n consumes.
    pub fn innovations_needed(&self, n: usize) -> usize {
        match self {
            FgnMethod::DaviesHarte => 2 * n,
            FgnMethod::Hosking | FgnMethod::Cholesky => n,
        }
    }
}

impl std::str::FromStr for FgnMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "davies_harte" | "davies-harte" => Ok(FgnMethod::DaviesHarte),
            "hosking" => Ok(FgnMethod::Hosking),
            "cholesky" => Ok(FgnMethod::Cholesky),
            other => Err(Error::domain(format!("unknown fGn method '{other}'"))),
        }
    }
}

/// A sampled d-dimensional fBm trajectory on a uniform time grid.
///
/// `values` is (n+1)×d row-major; the path starts at the origin.
#[derive(Debug, Clone)]
pub struct FbmPath {
    pub h: HurstParam,
    pub dt: f64,
    pub dim: usize,
    pub seed: u64,
    values: Vec<f64>,
}

impl FbmPath {
    /// Assembles a path from row-major (time x dim) values.
    pub fn from_values(h: HurstParam, dt: f64, dim: usize, seed: u64, values: Vec<f64>) -> Result<Self> {
        if dim < 1 || values.len() % dim != 0 || values.is_empty() {
            return Err(Error::domain("path values must be a nonempty multiple of dim"));
        }
        Ok(Self { h, dt, dim, seed, values })
    }

    /// Number of grid points, n+1 for n increments.
    pub fn len_points(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copies out the scalar series of one coordinate.
    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.len_points()).map(|k| self.values[k * self.dim + j]).collect()
    }

    pub fn to_cloud(&self) -> PointCloud {
        PointCloud::new(self.len_points(), self.dim, self.values.clone())
            .expect("fBm path is a valid cloud")
    }
}

/// fBm covariance E[B_t B_s] = 1/2 (t^{2H} + s^{2H} - |t-s|^{2H}).
pub fn fbm_covariance(t: f64, s: f64, h: HurstParam) -> Result<f64> {
    if !(t.is_finite() && s.is_finite()) || t < 0.0 || s < 0.0 {
        return Err(Error::domain(format!(
            "covariance times must be finite and non-negative, got t={t}, s={s}"
        )));
    }
    let two_h = 2.0 * h.value();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Autocovariance of unit-step fGn at integer lag k.
pub fn fgn_autocovariance(k: i64, h: HurstParam) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k.unsigned_abs() as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// Mixes a master seed with a component index, splitmix-style, so that
/// multi-dimensional paths get reproducible per-component streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn standard_normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Samples n values of unit-step fGn. Deterministic in (method, seed, n, h).
pub fn sample_fgn(n: usize, h: HurstParam, method: FgnMethod, seed: u64) -> Result<Vec<f64>> {
    let innovations = standard_normals(seed, method.innovations_needed(n));
    fgn_from_innovations(n, h, method, &innovations)
}

/// Same as [`sample_fgn`] but with caller-supplied standard-normal
/// innovations, which lets tests feed one innovation sequence to several
/// methods. The required length is [`FgnMethod::innovations_needed`].
pub fn fgn_from_innovations(
    n: usize,
    h: HurstParam,
    method: FgnMethod,
    innovations: &[f64],
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("fGn sample length must be at least 1"));
    }
    let needed = method.innovations_needed(n);
    if innovations.len() != needed {
        return Err(Error::domain(format!(
            "{method:?} with n={n} needs {needed} innovations, got {}",
            innovations.len()
        )));
    }
    match method {
        FgnMethod::DaviesHarte => davies_harte(n, h, innovations),
        FgnMethod::Hosking => hosking(n, h, innovations),
        FgnMethod::Cholesky => cholesky_sample(n, h, innovations),
    }
}

/// Circulant embedding of the n×n Toeplitz covariance into size 2n with
/// gamma(n) at the fold. Eigenvalues come from one FFT; a second FFT of the
/// weighted Hermitian noise vector yields the sample.
fn davies_harte(n: usize, h: HurstParam, z: &[f64]) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    for (k, slot) in row.iter_mut().enumerate().take(n + 1) {
        *slot = Complex::new(fgn_autocovariance(k as i64, h), 0.0);
    }
    for k in n + 1..m {
        row[k] = row[m - k];
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let mut eigenvalues = Vec::with_capacity(m);
    for (k, lambda) in row.iter().enumerate() {
        let ev = lambda.re;
        if ev < EIGENVALUE_TOLERANCE {
            return Err(Error::numerical(format!(
                "circulant eigenvalue {k} is {ev:.3e}, below tolerance {EIGENVALUE_TOLERANCE:e}"
            )));
        }
        eigenvalues.push(ev.max(0.0));
    }

    // Hermitian-symmetric Gaussian vector with Var(a_k) = lambda_k / m.
    let mut a: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    let mf = m as f64;
    a[0] = Complex::new((eigenvalues[0] / mf).sqrt() * z[0], 0.0);
    a[n] = Complex::new((eigenvalues[n] / mf).sqrt() * z[m - 1], 0.0);
    for k in 1..n {
        let scale = (eigenvalues[k] / (2.0 * mf)).sqrt();
        let re = scale * z[2 * k - 1];
        let im = scale * z[2 * k];
        a[k] = Complex::new(re, im);
        a[m - k] = Complex::new(re, -im);
    }
    fft.process(&mut a);

    Ok(a.into_iter().take(n).map(|c| c.re).collect())
}

/// Durbin–Levinson recursive sampling: each value is the conditional mean
/// given the past plus an innovation scaled by the conditional deviation.
fn hosking(n: usize, h: HurstParam, z: &[f64]) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n as i64).map(|k| fgn_autocovariance(k, h)).collect();
    let mut out = Vec::with_capacity(n);
    out.push(z[0] * gamma[0].sqrt());

    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut variance = gamma[0];

    for step in 1..n {
        prev.clone_from(&phi);
        let partial = if step == 1 {
            gamma[1] / gamma[0]
        } else {
            let acc: f64 = (1..step).map(|k| prev[k - 1] * gamma[step - k]).sum();
            (gamma[step] - acc) / variance
        };
        phi.clear();
        for k in 1..step {
            phi.push(prev[k - 1] - partial * prev[step - k - 1]);
        }
        phi.push(partial);
        variance *= 1.0 - partial * partial;
        if variance <= 0.0 {
            return Err(Error::numerical(format!(
                "Durbin-Levinson variance became non-positive at step {step}"
            )));
        }

        let mean: f64 = (1..=step).map(|k| phi[k - 1] * out[step - k]).sum();
        out.push(mean + variance.sqrt() * z[step]);
    }
    Ok(out)
}

/// Dense Cholesky of the Toeplitz covariance; X = L z.
fn cholesky_sample(n: usize, h: HurstParam, z: &[f64]) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n as i64).map(|k| fgn_autocovariance(k, h)).collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gamma[i - j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::numerical(format!(
                        "covariance lost positive definiteness at pivot {i}"
                    )));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let out = (0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect();
    Ok(out)
}

/// Integrates unit-step fGn into a scalar fBm path with time step `dt`:
/// path[k] = dt^H * cumsum(increments)[k], path[0] = 0.
pub fn fgn_to_fbm(increments: &[f64], dt: f64, h: HurstParam) -> Result<FbmPath> {
    if increments.is_empty() {
        return Err(Error::domain("fGn increment sequence must be nonempty"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let scale = dt.powf(h.value());
    let mut values = Vec::with_capacity(increments.len() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for &inc in increments {
        acc += inc;
        values.push(scale * acc);
    }
    Ok(FbmPath { h, dt, dim: 1, seed: 0, values })
}

/// Samples a d-dimensional fBm path of n increments; the components are
/// independent scalar paths seeded by [`derive_seed`] of the master seed.
pub fn sample_fbm_multi(
    n: usize,
    dim: usize,
    h: HurstParam,
    dt: f64,
    method: FgnMethod,
    seed: u64,
) -> Result<FbmPath> {
    if dim < 1 {
        return Err(Error::domain("path dimension must be at least 1"));
    }
    let components: Vec<FbmPath> = (0..dim)
        .map(|j| {
            let fgn = sample_fgn(n, h, method, derive_seed(seed, j as u64))?;
            fgn_to_fbm(&fgn, dt, h)
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; (n + 1) * dim];
    for (j, comp) in components.iter().enumerate() {
        for k in 0..=n {
            values[k * dim + j] = comp.values[k];
        }
    }
    Ok(FbmPath { h, dt, dim, seed, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn hurst_param_rejects_boundaries() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::new(0.5).is_ok());
    }

    #[test]
    fn covariance_brownian_case_is_min() {
        // H = 1/2 reduces the covariance to min(t, s).
        assert!((fbm_covariance(2.0, 1.0, h(0.5)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_equal_times() {
        let expected = 2f64.powf(0.6);
        assert!((fbm_covariance(2.0, 2.0, h(0.3)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn covariance_at_origin_vanishes() {
        assert_eq!(fbm_covariance(0.0, 5.0, h(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn covariance_rejects_negative_times() {
        assert!(fbm_covariance(-1.0, 0.5, h(0.5)).is_err());
    }

    #[test]
    fn fgn_to_fbm_is_cumulative_sum_at_unit_step() {
        let path = fgn_to_fbm(&[1.0, 1.0, 1.0], 1.0, h(0.3)).unwrap();
        assert_eq!(path.values(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn fgn_to_fbm_rescales_by_dt_to_the_h() {
        let path = fgn_to_fbm(&[1.0], 4.0, h(0.5)).unwrap();
        assert_eq!(path.values(), &[0.0, 2.0]);
    }

    #[test]
    fn fgn_to_fbm_rejects_empty_and_bad_dt() {
        assert!(fgn_to_fbm(&[], 1.0, h(0.5)).is_err());
        assert!(fgn_to_fbm(&[1.0], 0.0, h(0.5)).is_err());
    }

    #[test]
    fn multi_path_starts_at_origin_and_is_deterministic() {
        let a = sample_fbm_multi(10, 3, h(0.5), 0.1, FgnMethod::DaviesHarte, 7).unwrap();
        let b = sample_fbm_multi(10, 3, h(0.5), 0.1, FgnMethod::DaviesHarte, 7).unwrap();
        assert_eq!(a.point(0), &[0.0, 0.0, 0.0]);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn multi_components_match_scalar_sampler() {
        let path = sample_fbm_multi(256, 2, h(0.7), 1.0, FgnMethod::DaviesHarte, 99).unwrap();
        for j in 0..2 {
            let fgn = sample_fgn(256, h(0.7), FgnMethod::DaviesHarte, derive_seed(99, j)).unwrap();
            let scalar = fgn_to_fbm(&fgn, 1.0, h(0.7)).unwrap();
            assert_eq!(path.component(j as usize), scalar.values());
        }
    }

    #[test]
    fn hosking_equals_cholesky_under_shared_innovations() {
        let z = standard_normals(123, 64);
        let a = fgn_from_innovations(64, h(0.7), FgnMethod::Hosking, &z).unwrap();
        let b = fgn_from_innovations(64, h(0.7), FgnMethod::Cholesky, &z).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "hosking {x} vs cholesky {y}");
        }
    }

    #[test]
    fn zero_length_sample_is_domain_error() {
        assert!(sample_fgn(0, h(0.5), FgnMethod::DaviesHarte, 1).is_err());
    }
}
