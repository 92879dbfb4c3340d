use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::data_io::rng::{domain, SeededStream};
use crate::error::{Error, Result};
use crate::metric::{EmpiricalSample, Estimator, MetricConfig};
use crate::numeric::{mean, sample_sd};

/// Bootstrap distribution of `W_p`: sorted replicates plus mean and
/// standard deviation (`n − 1` divisor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub b: usize,
}

impl BootstrapSummary {
    pub fn from_replicates(mut replicates: Vec<f64>) -> Result<Self> {
        if replicates.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "bootstrap needs at least 2 replicates, got {}",
                replicates.len()
            )));
        }
        replicates.sort_unstable_by(f64::total_cmp);
        let mean = mean(&replicates).clamp(replicates[0], replicates[replicates.len() - 1]);
        let sd = sample_sd(&replicates);
        Ok(BootstrapSummary {
            b: replicates.len(),
            replicates,
            mean,
            sd,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(mut replicates: Vec<f64>, mean: f64, sd: f64) -> Self {
        replicates.sort_unstable_by(f64::total_cmp);
        BootstrapSummary {
            b: replicates.len(),
            replicates,
            mean,
            sd,
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        quantile_sorted(&self.replicates, q)
    }

    /// Central percentile interval at the given coverage, e.g. 0.95.
    pub fn percentile_interval(&self, coverage: f64) -> Result<(f64, f64)> {
        let tail = (1.0 - coverage) / 2.0;
        Ok((self.quantile(tail)?, self.quantile(1.0 - tail)?))
    }
}

/// Nonparametric bootstrap of `W_p(X, Y)`.
///
/// Replicate `b` resamples `X` and `Y` independently, with replacement and
/// at their original sizes, from stream `b` of the bootstrap domain under
/// `seed`. Replicates run in parallel and are sorted before storage, so the
/// summary does not depend on the worker count.
pub fn bootstrap_wasserstein(
    x: &EmpiricalSample,
    y: &EmpiricalSample,
    cfg: &MetricConfig,
    b: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::InvalidParameter(format!("bootstrap needs B >= 2, got {b}")));
    }
    let replicates = (0..b as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededStream::for_domain(seed, domain::BOOTSTRAP, k).rng();
            let xi: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
            let yi: Vec<usize> = (0..y.len()).map(|_| rng.random_range(0..y.len())).collect();
            estimator.distance(&x.select(&xi), &y.select(&yi), cfg)
        })
        .collect::<Result<Vec<f64>>>()?;
    BootstrapSummary::from_replicates(replicates)
}
