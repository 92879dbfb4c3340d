//! Quantiles, the bootstrap, and the estimators for the analogy parameters.
//!
//! | Parameter | Estimator |
//! |-----------|-----------|
//! | ε | `mean + z_{1−α}·sd` or the `(1−α)` replicate quantile |
//! | η | `z_{1−α/2}·sd` |
//! | γ | `(1−β)` quantile of the displacements `d(x, φ(x))` |
//! | ξ | `Q_0.99 − Q_0.95` of the same displacements |
//! | δ | `½ min_{i≠j} (D_ij − r_i − r_j)` over class measures |

mod bootstrap;
mod classes;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_wasserstein, BootstrapSummary};
pub use classes::{class_geometry, estimate_delta, ClassGeometry, DeltaEstimate};

/// Linear interpolation between order statistics: with sorted `v_1..v_n`
/// and `h = (n−1)q + 1`, returns `v_⌊h⌋ + (h − ⌊h⌋)(v_⌈h⌉ − v_⌊h⌋)`.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile of an empty list"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("quantile input {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile level {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi {
        return Ok(a);
    }
    Ok(a + (h - lo as f64) * (b - a))
}

// Rational approximation of the inverse normal CDF (P. J. Acklam), relative
// error ~1.2e-9 before refinement.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

/// Inverse standard normal CDF: rational approximation followed by one
/// Halley step against `Φ(x) = erfc(−x/√2)/2`.
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "normal quantile needs 0 < prob < 1, got {prob}"
        )));
    }
    const P_LOW: f64 = 0.02425;
    let x = if prob < P_LOW {
        let q = (-2.0 * prob.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if prob <= 1.0 - P_LOW {
        let q = prob - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - prob).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if prob == 0.5 {
        return Ok(0.0);
    }
    let e = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - prob;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// How ε is read off the bootstrap distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMethod {
    /// `mean + z_{1−α}·sd`
    #[default]
    Normal,
    /// `(1−α)` empirical quantile of the replicates
    Quantile,
}

fn check_level(name: &str, level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// One-sided upper confidence bound on `W_p`.
pub fn estimate_epsilon(summary: &BootstrapSummary, alpha: f64, method: EpsilonMethod) -> Result<f64> {
    check_level("alpha", alpha)?;
    match method {
        EpsilonMethod::Normal => Ok(summary.mean + normal_quantile(1.0 - alpha)? * summary.sd),
        EpsilonMethod::Quantile => quantile_sorted(&summary.replicates, 1.0 - alpha),
    }
}

/// Reliability correction `z_{1−α/2}·sd` (two-sided).
pub fn estimate_eta(summary: &BootstrapSummary, alpha: f64) -> Result<f64> {
    check_level("alpha", alpha)?;
    Ok(normal_quantile(1.0 - alpha / 2.0)? * summary.sd)
}

/// Per-point displacement `d(x, φ(x))` under a state transformer.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSample {
    sorted: Vec<f64>,
}

impl DisplacementSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("displacement sample"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "displacements must be finite and non-negative, got {v}"
            )));
        }
        let mut sorted = values;
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(DisplacementSample { sorted })
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("non-empty by construction")
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        quantile_sorted(&self.sorted, q)
    }
}

/// Transformer stability γ: the `(1−β)` quantile of the displacements.
pub fn estimate_gamma(disp: &DisplacementSample, beta: f64) -> Result<f64> {
    check_level("beta", beta)?;
    disp.quantile(1.0 - beta)
}

/// Tail spread `Q_0.99 − Q_0.95` of the displacements; never negative.
pub fn estimate_xi(disp: &DisplacementSample) -> Result<f64> {
    Ok((disp.quantile(0.99)? - disp.quantile(0.95)?).max(0.0))
}

/// Rate `r_n(d, p)` at which `E W_p(P_n, P)` shrinks:
/// `n^(−1/2)` for `d < 2p`, `n^(−1/2)·(log n)^(1/2)` for `d = 2p`,
/// `n^(−1/d)` for `d > 2p`.
pub fn convergence_rate(n: f64, d: f64, p: f64) -> Result<f64> {
    if !(n >= 1.0 && n.is_finite()) || !(d > 0.0 && d.is_finite()) || !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "convergence_rate needs n >= 1, d > 0, p >= 1 (got n={n}, d={d}, p={p})"
        )));
    }
    let two_p = 2.0 * p;
    Ok(if d < two_p {
        1.0 / n.sqrt()
    } else if d == two_p {
        (n.ln() / n).sqrt()
    } else {
        n.powf(-1.0 / d)
    })
}
