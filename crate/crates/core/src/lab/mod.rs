//! Monte Carlo verification of the limit theorems: ensembles of normalized
//! rectangular sums, normality diagnostics, covariance estimation with
//! polarization, Cramér–Wold projections, anisotropic shape sweeps and
//! Hilbert tail (tightness) profiles.

mod covariance;
mod ensemble;
mod normality;
mod sweep;
mod tightness;

pub use covariance::{analytic_cov, analytic_limit_cov, estimate_cov, CovarianceEstimate, CovarianceReport};
pub use ensemble::{run_ensemble, EnsembleResult};
pub use normality::{
    anderson_darling, cramer_wold, ks_statistic, ks_threshold, normality_test, normality_test_values,
    NormalityReport, KS_CRITICAL, KS_SLACK, MIN_NORMALITY_REPS,
};
pub use sweep::{shape_schedule, variance_convergence, GrowthRule, VarianceRow, VarianceTable};
pub use tightness::{tightness_profile, TightnessEntry, TightnessReport};

/// Relative Monte Carlo slack `4/√R` used by one-sided bound checks.
pub fn mc_slack(reps: usize) -> f64 {
    4.0 / (reps as f64).sqrt()
}
