//! Runtime verification of the Hoare-logic form of the theorem.
//!
//! Every check quantifies over a supplied finite set of states, so a passing
//! report means "held on the `total` states examined", not a proof. Triples
//! whose precondition selects no state hold vacuously and are flagged.
//!
//! Inequalities follow the theorem exactly: C1 uses `≤ γ` (up to rounding), U4 selects
//! `D(s, s0) ≤ ε − γ`, U5 selects `D(s, s0) > ε + γ`, U6 selects
//! `D(s1, s2) < δ − 2γ`. Nondeterministic transformers are read demonically
//! (every successor must satisfy the postcondition) except in
//! [`check_u2_nondet`], which offers both readings.

// `!(a > b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod transformer;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analogy::ThresholdPredicate;
use crate::data_io::rng::{domain, SeededStream};
use crate::error::{Error, Result};
use crate::metric::{check_dims, euclidean, EmpiricalSample};

pub use transformer::{
    FnSetTransformer, FnTransformer, Identity, Jitter, Scaling, StateTransformer, SubprocessTransformer, Successors,
    TransformerKind, Translation, TwoBranchJump,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripleId {
    C1,
    C2,
    U4,
    U5,
    U6,
    #[serde(rename = "U2_demonic")]
    U2Demonic,
    #[serde(rename = "U2_angelic")]
    U2Angelic,
}

impl fmt::Display for TripleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripleId::C1 => "C1",
            TripleId::C2 => "C2",
            TripleId::U4 => "U4",
            TripleId::U5 => "U5",
            TripleId::U6 => "U6",
            TripleId::U2Demonic => "U2 (demonic)",
            TripleId::U2Angelic => "U2 (angelic)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub triple: TripleId,
    /// States (or pairs, for U6) satisfying the precondition.
    pub total: usize,
    /// Of those, how many met the postcondition.
    pub satisfied: usize,
    /// Indices into the checked states (pairs for U6), ascending.
    pub counterexamples: Vec<usize>,
    pub holds: bool,
    /// Precondition selected nothing.
    pub vacuous: bool,
    /// Size of the state (or pair) set that was examined.
    pub examined: usize,
}

impl TripleReport {
    fn universal(triple: TripleId, examined: usize, verdicts: impl IntoIterator<Item = (usize, bool)>) -> Self {
        let mut total = 0;
        let mut counterexamples = Vec::new();
        for (i, ok) in verdicts {
            total += 1;
            if !ok {
                counterexamples.push(i);
            }
        }
        TripleReport {
            triple,
            total,
            satisfied: total - counterexamples.len(),
            holds: counterexamples.is_empty(),
            vacuous: total == 0,
            counterexamples,
            examined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Every precondition state must have a bad successor.
    Demonic,
    /// Some precondition state must have a bad successor.
    Angelic,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Precondition(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Slack for comparing a displacement with a γ computed from those same
/// displacements, where rounding alone can put one a few ulps above.
const C1_RELATIVE_SLACK: f64 = 1e-12;

/// C1: `D(φ(s), s) ≤ γ` for every sampled state and every successor, up to
/// rounding.
pub fn check_c1(sample: &EmpiricalSample, t: &dyn StateTransformer, gamma: f64) -> Result<TripleReport> {
    check_gamma(gamma)?;
    let succ = t.apply_all(sample)?;
    let bound = gamma * (1.0 + C1_RELATIVE_SLACK);
    Ok(TripleReport::universal(
        TripleId::C1,
        sample.len(),
        sample
            .iter()
            .zip(&succ)
            .enumerate()
            .map(|(i, (s, set))| (i, set.iter().all(|n| euclidean(n, s) <= bound))),
    ))
}

/// C2: `F(s) → F(φ(s))`.
pub fn check_c2(sample: &EmpiricalSample, t: &dyn StateTransformer, f: &ThresholdPredicate) -> Result<TripleReport> {
    let succ = t.apply_all(sample)?;
    Ok(TripleReport::universal(
        TripleId::C2,
        sample.len(),
        sample
            .iter()
            .zip(&succ)
            .enumerate()
            .filter(|(_, (s, _))| f.holds(s))
            .map(|(i, (_, set))| (i, set.iter().all(|n| f.holds(n)))),
    ))
}

/// U4: `{D(s, s0) ≤ ε − γ} S {F(φ(s)) ↔ L(φ(s))}`.
#[allow(clippy::too_many_arguments)]
pub fn check_u4(
    sample: &EmpiricalSample,
    t: &dyn StateTransformer,
    s0: &[f64],
    eps: f64,
    gamma: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
) -> Result<TripleReport> {
    check_gamma(gamma)?;
    check_dims(sample.dim(), s0.len())?;
    if !(eps > gamma) {
        return Err(Error::Precondition(format!(
            "U4 needs eps > gamma (eps={eps}, gamma={gamma})"
        )));
    }
    let succ = t.apply_all(sample)?;
    let radius = eps - gamma;
    Ok(TripleReport::universal(
        TripleId::U4,
        sample.len(),
        sample
            .iter()
            .zip(&succ)
            .enumerate()
            .filter(|(_, (s, _))| euclidean(s, s0) <= radius)
            .map(|(i, (_, set))| (i, set.iter().all(|n| f.holds(n) == l.holds(n)))),
    ))
}

/// U5: `{D(s, s0) > ε + γ ∧ F(s)} S {¬L(φ(s))}`.
#[allow(clippy::too_many_arguments)]
pub fn check_u5(
    sample: &EmpiricalSample,
    t: &dyn StateTransformer,
    s0: &[f64],
    eps: f64,
    gamma: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
) -> Result<TripleReport> {
    check_gamma(gamma)?;
    check_dims(sample.dim(), s0.len())?;
    let succ = t.apply_all(sample)?;
    let radius = eps + gamma;
    Ok(TripleReport::universal(
        TripleId::U5,
        sample.len(),
        sample
            .iter()
            .zip(&succ)
            .enumerate()
            .filter(|(_, (s, _))| euclidean(s, s0) > radius && f.holds(s))
            .map(|(i, (_, set))| (i, set.iter().all(|n| !l.holds(n)))),
    ))
}

/// U6: `{D(s1, s2) < δ − 2γ} S {F(φ(s1)) ↔ F(φ(s2))}` over the given pairs,
/// for every combination of successors.
pub fn check_u6(
    pairs: &[(Vec<f64>, Vec<f64>)],
    t: &dyn StateTransformer,
    delta: f64,
    gamma: f64,
    f: &ThresholdPredicate,
) -> Result<TripleReport> {
    check_gamma(gamma)?;
    if !(delta > 2.0 * gamma) {
        return Err(Error::Precondition(format!(
            "U6 needs delta > 2·gamma (delta={delta}, gamma={gamma})"
        )));
    }
    if pairs.is_empty() {
        return Ok(TripleReport::universal(TripleId::U6, 0, std::iter::empty()));
    }
    let dim = pairs[0].0.len();
    let flat: Vec<f64> = pairs
        .iter()
        .flat_map(|(a, b)| a.iter().chain(b.iter()).copied())
        .collect();
    if pairs.iter().any(|(a, b)| a.len() != dim || b.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: pairs
                .iter()
                .map(|(a, b)| a.len().max(b.len()))
                .find(|&d| d != dim)
                .unwrap_or(dim),
        });
    }
    let states = EmpiricalSample::from_flat(dim, flat)?;
    let succ = t.apply_all(&states)?;
    let radius = delta - 2.0 * gamma;
    Ok(TripleReport::universal(
        TripleId::U6,
        pairs.len(),
        pairs
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| euclidean(a, b) < radius)
            .map(|(k, _)| {
                let (sa, sb) = (&succ[2 * k], &succ[2 * k + 1]);
                let ok = sa.iter().all(|x| sb.iter().all(|y| f.holds(x) == f.holds(y)));
                (k, ok)
            }),
    ))
}

/// Within-sample pairs for U6: all `i < j` pairs when there are at most
/// `budget` of them, otherwise `budget` distinct-index pairs drawn from the
/// seeded pair stream.
pub fn sample_pairs(sample: &EmpiricalSample, budget: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = sample.len();
    let all = n * n.saturating_sub(1) / 2;
    let to_points = |(i, j): (usize, usize)| (sample.point(i).to_vec(), sample.point(j).to_vec());
    if all <= budget {
        return (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(to_points)
            .collect();
    }
    let mut rng = SeededStream::for_domain(seed, domain::PAIRS, 1).rng();
    (0..budget)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            to_points((i.min(j), i.max(j)))
        })
        .collect()
}

/// Nondeterministic U2. For states with `D(s, s0) ≤ δ − 2γ`, a successor
/// `s'` is a violation witness when `D(s', s0) > ε ∧ F(s') ∧ ¬L(s')`.
/// Demonic: every such state needs a witness successor. Angelic: at least
/// one such state does (so an empty precondition set fails).
#[allow(clippy::too_many_arguments)]
pub fn check_u2_nondet(
    sample: &EmpiricalSample,
    t: &dyn StateTransformer,
    s0: &[f64],
    eps: f64,
    delta: f64,
    gamma: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
    semantics: Semantics,
) -> Result<TripleReport> {
    if t.kind() == TransformerKind::Deterministic {
        return Err(Error::Precondition(
            "deterministic transformer: use the deterministic triples".into(),
        ));
    }
    check_gamma(gamma)?;
    check_dims(sample.dim(), s0.len())?;
    if !(delta > 2.0 * gamma) {
        return Err(Error::Precondition(format!(
            "U2 needs delta > 2·gamma (delta={delta}, gamma={gamma})"
        )));
    }
    let succ = t.apply_all(sample)?;
    let radius = delta - 2.0 * gamma;
    let verdicts = sample
        .iter()
        .zip(&succ)
        .enumerate()
        .filter(|(_, (s, _))| euclidean(s, s0) <= radius)
        .map(|(i, (_, set))| {
            let witnessed = set.iter().any(|n| euclidean(n, s0) > eps && f.holds(n) && !l.holds(n));
            (i, witnessed)
        });
    let demonic = TripleReport::universal(TripleId::U2Demonic, sample.len(), verdicts);
    Ok(match semantics {
        Semantics::Demonic => demonic,
        Semantics::Angelic => {
            let holds = demonic.satisfied > 0;
            let counterexamples = if holds {
                Vec::new()
            } else {
                let mut all = demonic.counterexamples;
                all.sort_unstable();
                all
            };
            TripleReport {
                triple: TripleId::U2Angelic,
                holds,
                counterexamples,
                ..demonic
            }
        }
    })
}

/// Shrunken analogy region under a transformer of stability `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRegion {
    pub eps_prime: f64,
    pub delta_prime: f64,
    /// `γ < min(ε, δ/2)`
    pub valid: bool,
}

pub fn effective_region(eps: f64, delta: f64, gamma: f64) -> Result<EffectiveRegion> {
    for (name, v) in [("eps", eps), ("delta", delta), ("gamma", gamma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    Ok(EffectiveRegion {
        eps_prime: eps - gamma,
        delta_prime: delta - 2.0 * gamma,
        valid: gamma < eps.min(delta / 2.0),
    })
}
