use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{check_dims, wasserstein_1d_pow_sorted, EmpiricalSample, MetricConfig};
use crate::data_io::rng::{domain, SeededStream};
use crate::error::{Error, Result};
use crate::numeric::fsum;

/// Direction `k` of the projection family for `seed`: a standard Gaussian
/// draw in `R^d` normalized to unit length. Zero-norm draws are redrawn.
pub fn unit_direction(dim: usize, seed: u64, k: u64) -> Vec<f64> {
    let mut rng = SeededStream::for_domain(seed, domain::PROJECTION, k).rng();
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Sliced `W_p`: `((1/K) Σ_k W_p^p(θ_k#X, θ_k#Y))^(1/p)` over `K = n_proj`
/// seeded directions. Bit-identical for any worker count.
pub fn sliced_wasserstein(
    x: &EmpiricalSample,
    y: &EmpiricalSample,
    cfg: &MetricConfig,
    n_proj: usize,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    check_dims(x.dim(), y.dim())?;
    if n_proj == 0 {
        return Err(Error::InvalidParameter("n_proj must be at least 1".into()));
    }
    let dim = x.dim();
    let per_projection: Vec<f64> = (0..n_proj as u64)
        .into_par_iter()
        .map(|k| {
            let theta = unit_direction(dim, seed, k);
            let mut px = project(x, &theta);
            let mut py = project(y, &theta);
            px.sort_unstable_by(f64::total_cmp);
            py.sort_unstable_by(f64::total_cmp);
            wasserstein_1d_pow_sorted(&px, &py, cfg)
        })
        .collect();
    Ok(cfg.root(fsum(per_projection) / n_proj as f64))
}

fn project(s: &EmpiricalSample, theta: &[f64]) -> Vec<f64> {
    s.iter()
        .map(|p| p.iter().zip(theta).map(|(a, b)| a * b).sum())
        .collect()
}
