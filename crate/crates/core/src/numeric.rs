//! Summation helpers shared by the reductions in this crate.

/// Neumaier-compensated sum. Order-dependent only at the level of the
/// compensation term, so results agree for any worker count as long as the
/// inputs arrive in a fixed order.
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Arithmetic mean via [`fsum`]. Returns NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    fsum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor; 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = fsum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}
