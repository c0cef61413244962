use nalgebra::DMatrix;
use serde::Serialize;

use super::EnsembleResult;
use crate::error::{Error, Result};
use crate::numeric::{central_moments, normal_cdf};

/// Asymptotic 1% critical value of `√R · KS`.
pub const KS_CRITICAL: f64 = 1.63;
/// Allowance for finite-`L` discreteness of the sums.
pub const KS_SLACK: f64 = 1.3;
pub const MIN_NORMALITY_REPS: usize = 100;

pub fn ks_threshold(sample_size: usize) -> f64 {
    KS_CRITICAL / (sample_size as f64).sqrt() * KS_SLACK
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub sample_size: usize,
    pub target_variance: f64,
    pub ks: f64,
    /// Reported only; the gate is the KS statistic.
    pub anderson_darling: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_threshold: f64,
    pub passed: bool,
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and
/// the continuous distribution function `cdf`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Anderson–Darling `A²` against the fully specified `N(0, σ²)`.
pub fn anderson_darling(values: &[f64], sigma2: f64) -> f64 {
    let sd = sigma2.sqrt();
    let mut z: Vec<f64> = values.iter().map(|x| x / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let nf = n as f64;
    let tiny = f64::MIN_POSITIVE;
    let s: f64 = (0..n)
        .map(|i| {
            let lower = normal_cdf(z[i]).max(tiny).ln();
            let upper = normal_cdf(-z[n - 1 - i]).max(tiny).ln();
            (2 * i + 1) as f64 * (lower + upper)
        })
        .sum();
    -nf - s / nf
}

/// Tests `values` against `N(0, σ²)`; passes iff `KS <= 1.63/√R · 1.3`.
pub fn normality_test_values(values: &[f64], sigma2: f64) -> Result<NormalityReport> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Degenerate(format!(
            "target variance {sigma2} is not positive; normality against N(0, 0) is undefined"
        )));
    }
    if values.len() < MIN_NORMALITY_REPS {
        return Err(Error::InvalidArgument(format!(
            "normality test needs at least {MIN_NORMALITY_REPS} replications, got {}",
            values.len()
        )));
    }
    let sd = sigma2.sqrt();
    let ks = ks_statistic(values, |x| normal_cdf(x / sd));
    let (_, m2, m3, m4) = central_moments(values);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    let threshold = ks_threshold(values.len());
    Ok(NormalityReport {
        sample_size: values.len(),
        target_variance: sigma2,
        ks,
        anderson_darling: anderson_darling(values, sigma2),
        skewness,
        excess_kurtosis,
        ks_threshold: threshold,
        passed: ks <= threshold,
    })
}

pub fn normality_test(result: &EnsembleResult, sigma2: f64) -> Result<NormalityReport> {
    normality_test_values(&result.scalar()?, sigma2)
}

/// Tests the projection `t · s_r` against `N(0, t Σ tᵀ)`.
pub fn cramer_wold(result: &EnsembleResult, t: &[f64], sigma: &DMatrix<f64>) -> Result<NormalityReport> {
    let m = result.components;
    if sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: sigma.nrows(),
        });
    }
    if t.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("projection direction t is zero".into()));
    }
    let projected = result.project(t)?;
    let tv = nalgebra::DVector::from_column_slice(t);
    let target = (tv.transpose() * sigma * &tv)[(0, 0)];
    if target.is_nan() || target <= 0.0 {
        return Err(Error::Degenerate(format!(
            "t Σ tᵀ = {target} is not positive for the requested direction"
        )));
    }
    normality_test_values(&projected, target)
}
