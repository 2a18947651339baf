//! Trajectory generalization bound.
//!
//! The covering-number argument bounds the Rademacher complexity of the set
//! of loss evaluations by
//!
//! ```text
//! R(H) <= 12 diam(H) / m * sqrt(ln 4 / H),
//! ```
//!
//! and combining it with hypothesis-set stability gives the full
//! high-probability bound on the population risk:
//!
//! ```text
//! total = risk + 24 zeta diam(H) / m * sqrt(ln 4 / H)
//!              + (zeta + 2 beta m) * sqrt(ln(1/tau) / (2m)).
//! ```
//!
//! All logarithms are natural. Estimated Hurst parameters above 1 are
//! clamped to 0.999 before entering the formulas, with the clamp flagged.

use crate::error::{Error, Result};
use crate::fbm::HurstParam;

/// Value an out-of-range Hurst estimate is clamped to.
pub const HURST_CLAMP: f64 = 0.999;

/// Inputs to the full bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// Diameter of the loss-evaluation set (2x the enclosing-ball radius).
    /// Zero is allowed: a degenerate trajectory contributes no complexity.
    pub diam: f64,
    /// Training set size.
    pub m: usize,
    /// Hurst parameter, already clamped into (0, 1).
    pub h: HurstParam,
    /// Upper bound on the loss.
    pub zeta: f64,
    /// Hypothesis-set stability coefficient.
    pub beta: f64,
    /// Confidence level: the bound holds with probability 1 - tau.
    pub tau: f64,
    /// Empirical risk at the final parameters.
    pub empirical_risk: f64,
    /// Whether `h` came out of [`clamp_hurst`] with clamping applied.
    pub hurst_clamped: bool,
}

impl BoundInputs {
    pub fn new(
        diam: f64,
        m: usize,
        h: HurstParam,
        zeta: f64,
        beta: f64,
        tau: f64,
        empirical_risk: f64,
    ) -> Result<Self> {
        if !(diam.is_finite() && diam >= 0.0) {
            return Err(Error::domain(format!("diameter must be >= 0, got {diam}")));
        }
        if m < 1 {
            return Err(Error::domain("training set size must be at least 1"));
        }
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::domain(format!("loss bound zeta must be positive, got {zeta}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::domain(format!("stability beta must be >= 0, got {beta}")));
        }
        if !(tau.is_finite() && tau > 0.0 && tau < 1.0) {
            return Err(Error::domain(format!("tau must lie strictly in (0, 1), got {tau}")));
        }
        if !(empirical_risk.is_finite() && empirical_risk >= 0.0) {
            return Err(Error::domain(format!(
                "empirical risk must be >= 0, got {empirical_risk}"
            )));
        }
        Ok(Self {
            diam,
            m,
            h,
            zeta,
            beta,
            tau,
            empirical_risk,
            hurst_clamped: false,
        })
    }

    pub fn with_clamp_flag(mut self, clamped: bool) -> Self {
        self.hurst_clamped = clamped;
        self
    }
}

/// Bound evaluation, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// 24 zeta diam / m * sqrt(ln 4 / H).
    pub rademacher_term: f64,
    /// (zeta + 2 beta m) * sqrt(ln(1/tau) / (2m)).
    pub concentration_term: f64,
    /// empirical risk + the two terms above.
    pub total: f64,
    /// Whether the Hurst estimate was clamped into range.
    pub clamped: bool,
}

/// Clamps a raw Hurst estimate into (0, 1) for use in the bound formulas.
/// Estimates at or above 1 (trended input) map to [`HURST_CLAMP`].
pub fn clamp_hurst(h_hat: f64) -> Result<(HurstParam, bool)> {
    if !h_hat.is_finite() {
        return Err(Error::domain(format!("Hurst estimate must be finite, got {h_hat}")));
    }
    if h_hat >= 1.0 {
        return Ok((HurstParam::new(HURST_CLAMP)?, true));
    }
    Ok((HurstParam::new(h_hat)?, false))
}

/// Rademacher complexity bound of the loss-evaluation set:
/// 12 diam / m * sqrt(ln 4 / H).
pub fn rademacher_bound(diam: f64, m: usize, h: HurstParam) -> Result<f64> {
    if !(diam.is_finite() && diam >= 0.0) {
        return Err(Error::domain(format!("diameter must be >= 0, got {diam}")));
    }
    if m < 1 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    Ok(12.0 * diam / m as f64 * (4f64.ln() / h.value()).sqrt())
}

/// Evaluates the full bound.
pub fn full_bound(inputs: &BoundInputs) -> BoundReport {
    let rademacher_term = 2.0
        * inputs.zeta
        * rademacher_bound(inputs.diam, inputs.m, inputs.h)
            .expect("inputs validated on construction");
    let m = inputs.m as f64;
    let concentration_term =
        (inputs.zeta + 2.0 * inputs.beta * m) * ((1.0 / inputs.tau).ln() / (2.0 * m)).sqrt();
    BoundReport {
        rademacher_term,
        concentration_term,
        total: inputs.empirical_risk + rademacher_term + concentration_term,
        clamped: inputs.hurst_clamped,
    }
}
