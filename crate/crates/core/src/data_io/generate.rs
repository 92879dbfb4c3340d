//! Synthetic Gaussian data.
//!
//! Normals come from `rand_distr::StandardNormal` (ziggurat) driven by a
//! ChaCha8 stream; coordinates are drawn point by point, in coordinate
//! order, so output is a pure function of `(seed, stream_id)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{domain, SeededStream};
use crate::error::{Error, Result};
use crate::metric::{EmpiricalSample, LabeledSample};

/// Spread of a multivariate normal: `scale · I` or a lower-triangular factor
/// `F` with covariance `F Fᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spread {
    Isotropic(f64),
    Factor(Vec<Vec<f64>>),
}

impl Default for Spread {
    fn default() -> Self {
        Spread::Isotropic(1.0)
    }
}

impl Spread {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Spread::Isotropic(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
                }
            }
            Spread::Factor(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidParameter(format!("covariance factor must be {d} x {d}")));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidParameter(
                            "covariance factor has non-finite entries".into(),
                        ));
                    }
                    if r[i + 1..].iter().any(|&v| v != 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "covariance factor must be lower-triangular (row {i})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn generate_gaussian(
    n: usize,
    d: usize,
    mean: &[f64],
    spread: &Spread,
    stream: SeededStream,
) -> Result<EmpiricalSample> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and d >= 1, got n={n}, d={d}"
        )));
    }
    if mean.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mean.len(),
        });
    }
    spread.validate(d)?;
    let mut rng = stream.rng();
    let mut data = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        for zk in z.iter_mut() {
            *zk = rng.sample(StandardNormal);
        }
        match spread {
            Spread::Isotropic(s) => data.extend(mean.iter().zip(&z).map(|(m, v)| m + s * v)),
            Spread::Factor(rows) => data.extend(
                rows.iter()
                    .zip(mean)
                    .map(|(row, m)| m + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()),
            ),
        }
    }
    EmpiricalSample::from_flat(d, data)
}

/// One Gaussian class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub n: usize,
    pub mean: Vec<f64>,
    #[serde(default)]
    pub scale: Spread,
}

/// Concatenated Gaussian blobs labelled `class0..class{K-1}`; class `k` is
/// drawn from stream `k` of the generator domain under `seed`.
pub fn generate_class_blobs(specs: &[BlobSpec], seed: u64) -> Result<LabeledSample> {
    if specs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {}",
            specs.len()
        )));
    }
    let d = specs[0].mean.len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (k, class) in specs.iter().enumerate() {
        if class.n == 0 {
            return Err(Error::InvalidParameter(format!("class {k} has n = 0")));
        }
        let blob = generate_gaussian(
            class.n,
            d,
            &class.mean,
            &class.scale,
            SeededStream::for_domain(seed, domain::GENERATOR, k as u64),
        )?;
        data.extend_from_slice(blob.as_flat());
        labels.extend(std::iter::repeat_n(k, class.n));
    }
    let names = (0..specs.len()).map(|k| format!("class{k}")).collect();
    LabeledSample::new(EmpiricalSample::from_flat(d, data)?, labels, names)
}
