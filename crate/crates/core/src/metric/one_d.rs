use crate::error::{Error, Result};
use crate::metric::MetricConfig;
use crate::numeric::fsum;

/// `W_p` between two 1-D empirical measures.
///
/// Equal sizes pair the order statistics directly. Unequal sizes integrate
/// `|F⁻¹(t) − G⁻¹(t)|^p` over the merged grid of breakpoints `i/n` and
/// `j/m`, on which both quantile functions are constant; the grid is walked
/// in integer units of `1/(n·m)` so no breakpoint is lost to rounding.
pub fn wasserstein_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    let cfg = MetricConfig::new(p)?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Empty("wasserstein_1d needs two non-empty samples"));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("1-D sample value {v}")));
    }
    Ok(cfg.root(wasserstein_1d_pow_unsorted(xs, ys, &cfg)))
}

pub(crate) fn wasserstein_1d_pow_unsorted(xs: &[f64], ys: &[f64], cfg: &MetricConfig) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    wasserstein_1d_pow_sorted(&xs, &ys, cfg)
}

/// `W_p^p` for already sorted inputs.
pub(crate) fn wasserstein_1d_pow_sorted(xs: &[f64], ys: &[f64], cfg: &MetricConfig) -> f64 {
    let n = xs.len();
    let m = ys.len();
    if n == m {
        return fsum(xs.iter().zip(ys).map(|(a, b)| cfg.pow((a - b).abs()))) / n as f64;
    }
    let total = (n as u128) * (m as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut cur: u128 = 0;
    let terms = std::iter::from_fn(|| {
        if cur >= total {
            return None;
        }
        let next_x = (i as u128 + 1) * m as u128;
        let next_y = (j as u128 + 1) * n as u128;
        let next = next_x.min(next_y);
        let term = (next - cur) as f64 * cfg.pow((xs[i] - ys[j]).abs());
        cur = next;
        if next_x == next {
            i += 1;
        }
        if next_y == next {
            j += 1;
        }
        Some(term)
    });
    fsum(terms) / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lists_in_any_order() {
        assert_eq!(wasserstein_1d(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn single_point_shift() {
        assert_eq!(wasserstein_1d(&[0.0], &[1.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_matches_brute_force() {
        // couplings {0->1, 1->2}: (1 + 1)/2 = 1 ; {0->2, 1->1}: (2 + 0)/2 = 1
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn unequal_sizes_hand_value() {
        // {0} vs {0, 2}: the point mass splits half to 0, half to 2.
        // p=1: 0.5*0 + 0.5*2 = 1 ; p=2: sqrt(0.5*4) = sqrt(2)
        assert_eq!(wasserstein_1d(&[0.0], &[0.0, 2.0], 1.0).unwrap(), 1.0);
        let w2 = wasserstein_1d(&[0.0], &[2.0, 0.0], 2.0).unwrap();
        assert!((w2 - 2f64.sqrt()).abs() < 1e-15);
        // {0, 1, 2} vs {0, 3}: grid in sixths, costs 0,1,2,1 weighted 2,1,1,2
        let w = wasserstein_1d(&[0.0, 1.0, 2.0], &[0.0, 3.0], 1.0).unwrap();
        assert!((w - 5.0 / 6.0).abs() < 1e-15, "{w}");
    }

    #[test]
    fn errors() {
        assert!(wasserstein_1d(&[], &[1.0], 1.0).is_err());
        assert!(wasserstein_1d(&[1.0], &[f64::NAN], 1.0).is_err());
        assert!(wasserstein_1d(&[1.0], &[1.0], 0.5).is_err());
    }
}
