//! Euler–Maruyama integration of SDEs driven by fractional Brownian motion,
//!
//! ```text
//! W_{k+1} = W_k - mu(W_k) dt + sigma * dB_k,    dB_k = dt^H * fGn_k,
//! ```
//!
//! on a small library of analytic drift fields. With zero drift and unit
//! diffusion the recursion reduces to the fBm path itself, which is the basis
//! of the trajectory-dimension experiment: the image of a d-dimensional fBm
//! path has box-counting dimension min(d, 1/H), so the estimated dimension of
//! a long zero-drift trajectory should track 1/H whenever 1/H < d.

use crate::boxdim::{estimate_boxdim_auto_seeded, BoxDimEstimate};
use crate::error::{Error, Result};
use crate::fbm::{derive_seed, sample_fgn, FbmPath, FgnMethod, HurstParam};

/// Magnitude at which a drift component counts as a blow-up.
const DRIFT_BOUND: f64 = 1e6;

/// Drift field mu(w), applied coordinate-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drift {
    Zero,
    /// mu(w) = rate * w; the noiseless flow decays like exp(-rate * t).
    Linear { rate: f64 },
    /// Gradient of the double-well potential a (w^2 - b)^2 per coordinate:
    /// mu(w) = 4 a w (w^2 - b).
    DoubleWell { a: f64, b: f64 },
}

impl Drift {
    fn eval(&self, w: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { rate } => rate * w,
            Drift::DoubleWell { a, b } => 4.0 * a * w * (w * w - b),
        }
    }
}

/// Integration recipe.
#[derive(Debug, Clone)]
pub struct SdeConfig {
    pub drift: Drift,
    /// Scalar diffusion coefficient, sigma >= 0.
    pub sigma: f64,
    pub h: HurstParam,
    pub dt: f64,
    pub steps: usize,
    /// Initial point; its length fixes the dimension.
    pub w0: Vec<f64>,
    pub seed: u64,
}

/// Integrates the SDE. The noise increments per component are exactly the
/// fGn streams the fBm sampler draws for `seed`, so a zero-drift unit-sigma
/// run reproduces `w0` plus the fBm path bit for bit.
pub fn integrate(config: &SdeConfig) -> Result<FbmPath> {
    if config.steps < 1 {
        return Err(Error::domain("need at least 1 step"));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {}", config.dt)));
    }
    if !(config.sigma.is_finite() && config.sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be >= 0, got {}", config.sigma)));
    }
    let dim = config.w0.len();
    if dim < 1 {
        return Err(Error::domain("initial point must have dimension >= 1"));
    }

    let increments: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            sample_fgn(
                config.steps,
                config.h,
                FgnMethod::DaviesHarte,
                derive_seed(config.seed, j as u64),
            )
        })
        .collect::<Result<_>>()?;

    let scale = config.dt.powf(config.h.value());
    let mut values = Vec::with_capacity((config.steps + 1) * dim);
    values.extend_from_slice(&config.w0);

    // State is kept as w0 + accumulated drift + sigma * (dt^H * fgn cumsum),
    // which keeps the noise-only case identical to the fBm sampler.
    let mut drift_acc = vec![0.0; dim];
    let mut noise_acc = vec![0.0; dim];
    let mut w = config.w0.clone();

    for k in 0..config.steps {
        for j in 0..dim {
            let mu = config.drift.eval(w[j]);
            if !mu.is_finite() || mu.abs() > DRIFT_BOUND {
                return Err(Error::Integration {
                    step: k,
                    msg: format!("drift component {j} reached {mu:.3e}"),
                });
            }
            drift_acc[j] -= mu * config.dt;
            noise_acc[j] += increments[j][k];
            w[j] = config.w0[j] + drift_acc[j] + config.sigma * (scale * noise_acc[j]);
        }
        values.extend_from_slice(&w);
    }

    FbmPath::from_values(config.h, config.dt, dim, config.seed, values)
}

/// Integrates a zero-drift unit-sigma trajectory and estimates its
/// box-counting dimension over the automatic scale ladder. Requires
/// 1/H < d so the expected dimension is 1/H rather than d.
pub fn trajectory_dimension_experiment(
    h: HurstParam,
    dim: usize,
    steps: usize,
    seed: u64,
) -> Result<BoxDimEstimate> {
    if 1.0 / h.value() >= dim as f64 {
        return Err(Error::domain(format!(
            "need 1/H < d for the dimension check, got 1/{} vs {dim}",
            h.value()
        )));
    }
    let config = SdeConfig {
        drift: Drift::Zero,
        sigma: 1.0,
        h,
        dt: 1.0 / steps as f64,
        steps,
        w0: vec![0.0; dim],
        seed,
    };
    let path = integrate(&config)?;
    estimate_boxdim_auto_seeded(&path.to_cloud(), 12, derive_seed(seed, 0x50524F4A))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::sample_fbm_multi;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn zero_drift_zero_sigma_stays_put() {
        let config = SdeConfig {
            drift: Drift::Zero,
            sigma: 0.0,
            h: h(0.5),
            dt: 0.01,
            steps: 50,
            w0: vec![1.5, -2.0],
            seed: 3,
        };
        let path = integrate(&config).unwrap();
        for k in 0..=50 {
            assert_eq!(path.point(k), &[1.5, -2.0]);
        }
    }

    #[test]
    fn linear_drift_matches_exponential_decay() {
        let config = SdeConfig {
            drift: Drift::Linear { rate: 1.0 },
            sigma: 0.0,
            h: h(0.5),
            dt: 1e-3,
            steps: 1000,
            w0: vec![1.0],
            seed: 0,
        };
        let path = integrate(&config).unwrap();
        let terminal = path.point(1000)[0];
        assert!(
            (terminal - (-1f64).exp()).abs() < 2e-3,
            "terminal {terminal} vs e^-1"
        );
    }

    #[test]
    fn unit_sigma_zero_drift_reproduces_fbm_exactly() {
        let config = SdeConfig {
            drift: Drift::Zero,
            sigma: 1.0,
            h: h(0.7),
            dt: 0.05,
            steps: 128,
            w0: vec![0.25, -1.0, 3.0],
            seed: 11,
        };
        let path = integrate(&config).unwrap();
        let fbm = sample_fbm_multi(128, 3, h(0.7), 0.05, FgnMethod::DaviesHarte, 11).unwrap();
        for k in 0..=128 {
            for j in 0..3 {
                let expected = config.w0[j] + fbm.point(k)[j];
                assert_eq!(path.point(k)[j], expected, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn double_well_blow_up_reports_step() {
        let config = SdeConfig {
            drift: Drift::DoubleWell { a: 1e5, b: 1.0 },
            sigma: 0.0,
            h: h(0.5),
            dt: 10.0,
            steps: 100,
            w0: vec![2.0],
            seed: 0,
        };
        match integrate(&config) {
            Err(Error::Integration { .. }) => {}
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_experiment_rejects_saturated_setups() {
        // 1/0.3 > 3: the image dimension would saturate at d.
        assert!(trajectory_dimension_experiment(h(0.3), 3, 1000, 1).is_err());
    }
}
