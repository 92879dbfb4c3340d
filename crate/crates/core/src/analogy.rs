//! The admissibility verdict, the first-order statement checks on finite
//! samples, and the regularity audit of threshold predicates.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data_io::rng::{domain, SeededStream};
use crate::error::{Error, Result};
use crate::metric::{check_dims, euclidean, EmpiricalSample};

/// The safety parameters and confidence levels that enter the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalogyParameters {
    pub epsilon: f64,
    pub eta: f64,
    pub gamma: f64,
    pub xi: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl AnalogyParameters {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("xi", self.xi),
            ("delta", self.delta),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} is not finite: {v}")));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive for a verdict, got {}",
                self.epsilon
            )));
        }
        for (name, v) in [("eta", self.eta), ("gamma", self.gamma), ("xi", self.xi)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// Multiplies every distance-valued parameter by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        AnalogyParameters {
            epsilon: self.epsilon * c,
            eta: self.eta * c,
            gamma: self.gamma * c,
            xi: self.xi * c,
            delta: self.delta * c,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Verified,
    NotVerified,
    /// δ ≤ 0: the classes are not separable, nothing can be certified.
    NotCertifiable,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictStatus::Verified => "Verified",
            VerdictStatus::NotVerified => "Not verified",
            VerdictStatus::NotCertifiable => "Not certifiable (classes not separable)",
        })
    }
}

/// Outcome of [`check_analogy`].
///
/// Two readings of the admissibility threshold are in circulation,
/// `min(ε − η, (δ − ξ)/2)` and `min(ε − η, δ/2 − ξ)`. Both are reported and
/// the smaller one decides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalogyVerdict {
    /// `min(ε − η, (δ − ξ)/2)`
    #[serde(rename = "threshold_eq46")]
    pub threshold_joint: f64,
    /// `min(ε − η, δ/2 − ξ)`
    #[serde(rename = "threshold_table")]
    pub threshold_split: f64,
    pub threshold: f64,
    pub verified: bool,
    pub status: VerdictStatus,
    /// `threshold − γ`; positive exactly when verified.
    pub margin: f64,
    /// `α + 2β`
    #[serde(rename = "violation_bound_eq49")]
    pub violation_bound_union: f64,
    /// `2β`
    #[serde(rename = "violation_bound_eq51")]
    pub violation_bound_tail: f64,
}

pub fn check_analogy(params: &AnalogyParameters) -> Result<AnalogyVerdict> {
    params.validate()?;
    let AnalogyParameters {
        epsilon,
        eta,
        gamma,
        xi,
        delta,
        alpha,
        beta,
    } = *params;
    let threshold_joint = (epsilon - eta).min((delta - xi) / 2.0);
    let threshold_split = (epsilon - eta).min(delta / 2.0 - xi);
    let threshold = threshold_joint.min(threshold_split);
    let status = if delta <= 0.0 {
        VerdictStatus::NotCertifiable
    } else if gamma < threshold {
        VerdictStatus::Verified
    } else {
        VerdictStatus::NotVerified
    };
    Ok(AnalogyVerdict {
        threshold_joint,
        threshold_split,
        threshold,
        verified: status == VerdictStatus::Verified,
        status,
        margin: threshold - gamma,
        violation_bound_union: alpha + 2.0 * beta,
        violation_bound_tail: 2.0 * beta,
    })
}

type ScoreFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A predicate given by a real score: true exactly where `score(x) >= 0`.
#[derive(Clone)]
pub struct ThresholdPredicate {
    name: String,
    score: Arc<ScoreFn>,
}

impl fmt::Debug for ThresholdPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThresholdPredicate").field("name", &self.name).finish()
    }
}

impl ThresholdPredicate {
    pub fn new(name: impl Into<String>, score: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ThresholdPredicate {
            name: name.into(),
            score: Arc::new(score),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), move |_| value)
    }

    /// `radius − ‖x − center‖`: true inside the closed ball.
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Self::new(format!("ball(r={radius})"), move |x| radius - euclidean(x, &center))
    }

    /// `normal · x + offset`.
    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Self {
        Self::new("halfspace", move |x| {
            x.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() + offset
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        (self.score)(x)
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.0
    }
}

/// Finite-sample reading of the two theorem statements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolReport {
    /// Sampled points with `D(x, x0) ≤ ε`.
    pub ball_size: usize,
    /// Every sampled point in the ε-ball has `F(x) ↔ L(x)`.
    pub stmt3_holds: bool,
    /// Indices of points in the ε-ball where `F` and `L` disagree.
    pub stmt3_counterexamples: Vec<usize>,
    /// First index (input order) with `D(x, x0) > ε ∧ F(x) ∧ ¬L(x)`.
    /// `None` means no witness in this sample, not that none exists.
    pub stmt4_witness: Option<usize>,
}

pub fn check_fol_statements(
    sample: &EmpiricalSample,
    x0: &[f64],
    eps: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
) -> Result<FolReport> {
    check_dims(sample.dim(), x0.len())?;
    let mut ball_size = 0;
    let mut counterexamples = Vec::new();
    let mut witness = None;
    for (i, x) in sample.iter().enumerate() {
        let d = euclidean(x, x0);
        let (fx, lx) = (f.holds(x), l.holds(x));
        if d <= eps {
            ball_size += 1;
            if fx != lx {
                counterexamples.push(i);
            }
        } else if witness.is_none() && fx && !lx {
            witness = Some(i);
        }
    }
    Ok(FolReport {
        ball_size,
        stmt3_holds: counterexamples.is_empty(),
        stmt3_counterexamples: counterexamples,
        stmt4_witness: witness,
    })
}

/// Empirical audit of the regularity condition around `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Largest observed `|f_F(x) − f_F(y)| / D(x, y)`; a lower bound on `L_F`.
    pub lipschitz_f: f64,
    pub lipschitz_l: f64,
    pub lipschitz_lower_bound: bool,
    pub pairs_used: usize,
    /// Sampled points with `D(x, x0) ≤ δ`.
    pub ball_size: usize,
    /// `min` over the δ-ball of `max(|f_F(x)|, |f_L(x)|)`; `None` if the ball is empty.
    pub tau: Option<f64>,
    /// `min(τ/L_F, τ/L_L)`; `None` when unbounded or undefined.
    pub delta_cap: Option<f64>,
    pub delta: f64,
    pub satisfied: bool,
    pub note: Option<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn audit_regularity(
    sample: &EmpiricalSample,
    x0: &[f64],
    delta: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
    pair_budget: usize,
    seed: u64,
) -> Result<RegularityReport> {
    check_dims(sample.dim(), x0.len())?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!(
            "regularity audit needs delta > 0, got {delta}"
        )));
    }
    if pair_budget == 0 {
        return Err(Error::Precondition("pair_budget must be at least 1".into()));
    }

    let n = sample.len();
    let mut lipschitz_f = 0.0_f64;
    let mut lipschitz_l = 0.0_f64;
    let mut pairs_used = 0;
    if n >= 2 {
        let mut rng = SeededStream::for_domain(seed, domain::PAIRS, 0).rng();
        for _ in 0..pair_budget {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = (sample.point(i), sample.point(j));
            let d = euclidean(x, y);
            if d <= 1e-9 {
                continue;
            }
            pairs_used += 1;
            lipschitz_f = lipschitz_f.max((f.score(x) - f.score(y)).abs() / d);
            lipschitz_l = lipschitz_l.max((l.score(x) - l.score(y)).abs() / d);
        }
    }

    let mut ball_size = 0;
    let mut tau = f64::INFINITY;
    for x in sample.iter() {
        if euclidean(x, x0) <= delta {
            ball_size += 1;
            tau = tau.min(f.score(x).abs().max(l.score(x).abs()));
        }
    }

    if ball_size == 0 {
        return Ok(RegularityReport {
            lipschitz_f,
            lipschitz_l,
            lipschitz_lower_bound: true,
            pairs_used,
            ball_size,
            tau: None,
            delta_cap: None,
            delta,
            satisfied: false,
            note: Some("δ-ball unpopulated".into()),
        });
    }

    let cap = |lip: f64| if lip > 0.0 { tau / lip } else { f64::INFINITY };
    let delta_cap = cap(lipschitz_f).min(cap(lipschitz_l));
    let margin_ok = tau > 0.0;
    let satisfied = margin_ok && delta <= delta_cap;
    let note = if !margin_ok {
        Some("margin condition fails: some point in the δ-ball has both scores at 0".into())
    } else if !satisfied {
        Some("δ exceeds min(τ/L_F, τ/L_L)".into())
    } else {
        None
    };
    Ok(RegularityReport {
        lipschitz_f,
        lipschitz_l,
        lipschitz_lower_bound: true,
        pairs_used,
        ball_size,
        tau: Some(tau),
        delta_cap: delta_cap.is_finite().then_some(delta_cap),
        delta,
        satisfied,
        note,
    })
}
