//! Ground metric and the Wasserstein family over empirical samples.
//!
//! All samples carry uniform weights (`1/n` per point). Three routes to `W_p`
//! are provided:
//!
//! - [`wasserstein_1d`]: closed form through order statistics,
//! - [`wasserstein_exact`]: exact discrete transport (assignment when
//!   `n == m`, min-cost flow otherwise),
//! - [`sliced_wasserstein`]: Monte Carlo average over random 1-D projections.

mod assignment;
mod one_d;
mod sliced;
mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fsum;

pub use one_d::wasserstein_1d;
pub(crate) use one_d::wasserstein_1d_pow_sorted;
pub use sliced::{sliced_wasserstein, unit_direction};
pub use transport::{wasserstein_exact, ExactSolver, TransportPlan, DEFAULT_COST_CAP};

/// A point in `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point has no coordinates"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("point coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `n` points in `R^d`, stored row-major, each with weight `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    dim: usize,
    data: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::Empty("sample has no points"))?.len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            data.extend(p);
        }
        Self::from_flat(dim, data)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("sample has zero dimension"));
        }
        if data.is_empty() {
            return Err(Error::Empty("sample has no points"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} values do not split into rows of {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {}, column {}: {}",
                i / dim,
                i % dim,
                data[i]
            )));
        }
        Ok(EmpiricalSample { dim, data })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        Self::new(points.iter().map(|p| p.coords().to_vec()).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Rows picked by `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> EmpiricalSample {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        EmpiricalSample { dim: self.dim, data }
    }

    pub fn scaled(&self, c: f64) -> EmpiricalSample {
        EmpiricalSample {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn translated(&self, offset: &[f64]) -> Result<EmpiricalSample> {
        check_dims(self.dim, offset.len())?;
        let data = self
            .iter()
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Ok(EmpiricalSample { dim: self.dim, data })
    }

    /// Coordinate-wise mean.
    pub fn barycenter(&self) -> Point {
        let n = self.len();
        let coords = (0..self.dim)
            .map(|k| fsum(self.iter().map(|p| p[k])) / n as f64)
            .collect();
        Point(coords)
    }

    /// Single coordinate column; handy for 1-D data.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.iter().map(|p| p[k]).collect()
    }
}

/// An [`EmpiricalSample`] whose rows carry dense class labels `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    sample: EmpiricalSample,
    labels: Vec<usize>,
    names: Vec<String>,
}

impl LabeledSample {
    /// `names[k]` is the original label for class `k`.
    pub fn new(sample: EmpiricalSample, labels: Vec<usize>, names: Vec<String>) -> Result<Self> {
        if labels.len() != sample.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                sample.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} has no name ({} classes)",
                names.len()
            )));
        }
        Ok(LabeledSample { sample, labels, names })
    }

    pub fn sample(&self) -> &EmpiricalSample {
        &self.sample
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.names
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    /// Per-class samples in label order. Fails if a class has no points.
    pub fn classes(&self) -> Result<Vec<EmpiricalSample>> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.names.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
            .iter()
            .enumerate()
            .map(|(k, idx)| {
                if idx.is_empty() {
                    Err(Error::InvalidParameter(format!(
                        "class {:?} has no points",
                        self.names[k]
                    )))
                } else {
                    Ok(self.sample.select(idx))
                }
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> LabeledSample {
        LabeledSample {
            sample: self.sample.scaled(c),
            labels: self.labels.clone(),
            names: self.names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundMetric {
    #[default]
    Euclidean,
}

/// Order `p` of `W_p` and the ground metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub p: f64,
    #[serde(default)]
    pub base: GroundMetric,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            p: 1.0,
            base: GroundMetric::Euclidean,
        }
    }
}

impl MetricConfig {
    pub fn new(p: f64) -> Result<Self> {
        let cfg = MetricConfig {
            p,
            base: GroundMetric::Euclidean,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "order p must be a finite real >= 1, got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Only `p = 1` and `p = 2` are covered by the test oracles.
    pub fn is_validated_order(&self) -> bool {
        self.p == 1.0 || self.p == 2.0
    }

    /// `d(a, b)^p` for the ground metric.
    #[inline]
    pub(crate) fn cost(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq = squared_euclidean(a, b);
        if self.p == 2.0 {
            sq
        } else if self.p == 1.0 {
            sq.sqrt()
        } else {
            sq.sqrt().powf(self.p)
        }
    }

    #[inline]
    pub(crate) fn pow(&self, x: f64) -> f64 {
        if self.p == 1.0 {
            x
        } else if self.p == 2.0 {
            x * x
        } else {
            x.powf(self.p)
        }
    }

    #[inline]
    pub(crate) fn root(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        if self.p == 1.0 {
            x
        } else if self.p == 2.0 {
            x.sqrt()
        } else {
            x.powf(1.0 / self.p)
        }
    }
}

/// How `W_p` between two samples is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    Exact,
    Sliced { n_proj: usize, seed: u64 },
}

impl Estimator {
    pub fn distance(&self, x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> Result<f64> {
        match *self {
            Estimator::Exact => ExactSolver::default().distance(x, y, cfg),
            Estimator::Sliced { n_proj, seed } => sliced_wasserstein(x, y, cfg, n_proj, seed),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Exact => "exact",
            Estimator::Sliced { .. } => "sliced",
        }
    }
}

#[inline]
fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Euclidean distance between two points of equal dimension.
pub fn ground_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(euclidean(a, b))
}

/// `W_p(δ_x, S)`: the only coupling sends the point mass to every `s_j` with
/// weight `1/n`, so the cost is `((1/n) Σ d(x, s_j)^p)^(1/p)`.
pub fn point_to_sample_distance(x: &[f64], sample: &EmpiricalSample, cfg: &MetricConfig) -> Result<f64> {
    check_dims(sample.dim(), x.len())?;
    let total = fsum(sample.iter().map(|s| cfg.cost(x, s)));
    Ok(cfg.root(total / sample.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_distance_basics() {
        assert_eq!(ground_distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(ground_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            ground_distance(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_to_sample_examples() {
        let cfg2 = MetricConfig::new(2.0).unwrap();
        let s = EmpiricalSample::new(vec![vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(point_to_sample_distance(&[0.0, 0.0], &s, &cfg2).unwrap(), 1.0);
        let single = EmpiricalSample::new(vec![vec![2.0, 3.0]]).unwrap();
        assert_eq!(point_to_sample_distance(&[2.0, 3.0], &single, &cfg2).unwrap(), 0.0);
    }

    #[test]
    fn sample_rejects_bad_input() {
        assert!(EmpiricalSample::new(vec![]).is_err());
        assert!(EmpiricalSample::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(matches!(
            EmpiricalSample::new(vec![vec![f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn metric_config_orders() {
        assert!(MetricConfig::new(0.5).is_err());
        assert!(MetricConfig::new(1.0).unwrap().is_validated_order());
        assert!(!MetricConfig::new(3.0).unwrap().is_validated_order());
    }

    #[test]
    fn labeled_classes_split_in_label_order() {
        let s = EmpiricalSample::new(vec![vec![0.0], vec![5.0], vec![1.0]]).unwrap();
        let l = LabeledSample::new(s, vec![0, 1, 0], vec!["a".into(), "b".into()]).unwrap();
        let classes = l.classes().unwrap();
        assert_eq!(classes[0].column(0), vec![0.0, 1.0]);
        assert_eq!(classes[1].column(0), vec![5.0]);

        let s = EmpiricalSample::new(vec![vec![0.0]]).unwrap();
        let empty = LabeledSample::new(s, vec![0], vec!["a".into(), "b".into()]).unwrap();
        assert!(empty.classes().is_err());
    }
}
