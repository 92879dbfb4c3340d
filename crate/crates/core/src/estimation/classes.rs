use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{point_to_sample_distance, Estimator, LabeledSample, MetricConfig};

/// Pairwise class distances `D_ij = W_p(μ_i, μ_j)` and class radii
/// `r_i = max_{x ∈ class i} W_p(δ_x, μ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGeometry {
    pub distances: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl ClassGeometry {
    #[allow(clippy::needless_range_loop)]
    pub fn new(distances: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        let k = radii.len();
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 classes, got {k}")));
        }
        if distances.len() != k || distances.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter("distance matrix must be K x K".into()));
        }
        for i in 0..k {
            if distances[i][i] != 0.0 || radii[i] < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "class {i}: zero diagonal and non-negative radius required"
                )));
            }
            for j in 0..i {
                if distances[i][j] != distances[j][i] || distances[i][j] < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "D[{i}][{j}] must be symmetric and non-negative"
                    )));
                }
            }
        }
        Ok(ClassGeometry { distances, radii })
    }

    pub fn num_classes(&self) -> usize {
        self.radii.len()
    }

    pub fn scaled(&self, c: f64) -> ClassGeometry {
        ClassGeometry {
            distances: self
                .distances
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
            radii: self.radii.iter().map(|v| v * c).collect(),
        }
    }
}

pub fn class_geometry(data: &LabeledSample, cfg: &MetricConfig, estimator: Estimator) -> Result<ClassGeometry> {
    if data.num_classes() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {}",
            data.num_classes()
        )));
    }
    let classes = data.classes()?;
    let k = classes.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = estimator.distance(&classes[i], &classes[j], cfg)?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let radii = classes
        .iter()
        .map(|c| {
            c.iter()
                .map(|x| point_to_sample_distance(x, c, cfg))
                .try_fold(0.0_f64, |acc, r| r.map(|r| acc.max(r)))
        })
        .collect::<Result<Vec<f64>>>()?;
    ClassGeometry::new(distances, radii)
}

/// Stability boundary δ and the class pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: f64,
    pub separable: bool,
    /// Lexicographically smallest `(i, j)`, `i < j`, attaining the minimum.
    pub pair: (usize, usize),
}

/// `δ = ½ min_{i≠j} (D_ij − r_i − r_j)`, reported unclamped; negative values
/// mean the classes overlap.
pub fn estimate_delta(geom: &ClassGeometry) -> DeltaEstimate {
    let k = geom.num_classes();
    let mut best = f64::INFINITY;
    let mut pair = (0, 1);
    for i in 0..k {
        for j in (i + 1)..k {
            let gap = geom.distances[i][j] - geom.radii[i] - geom.radii[j];
            if gap < best {
                best = gap;
                pair = (i, j);
            }
        }
    }
    let value = 0.5 * best;
    DeltaEstimate {
        value,
        separable: value > 0.0,
        pair,
    }
}
