//! Deterministic reductions and the normal distribution function.

use statrs::function::erf::erfc;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so the result is bit-reproducible for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Mean of `f(x)` over `values`, reduced pairwise.
pub fn mean_of(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mapped: Vec<f64> = values.iter().map(|&x| f(x)).collect();
    mean(&mapped)
}

/// Standard normal distribution function `Φ(x) = erfc(-x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample moments about the sample mean: `(mean, m2, m3, m4)`.
pub fn central_moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let mu = mean(values);
    let m2 = mean_of(values, |x| (x - mu).powi(2));
    let m3 = mean_of(values, |x| (x - mu).powi(3));
    let m4 = mean_of(values, |x| (x - mu).powi(4));
    (mu, m2, m3, m4)
}
