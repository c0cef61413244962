use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::blocking::{decompose, negligibility_ratio, schedule, small_block_bound, small_block_constant};
use crate::error::{Error, Result};
use crate::field::{pop_moments, sample_linear, truncate_tail, truncation_constant, centering_constant, FieldSpec, LinearFieldSpec};
use crate::lab::{
    analytic_cov, analytic_limit_cov, cramer_wold, estimate_cov, mc_slack, normality_test, run_ensemble,
    tightness_profile, variance_convergence, CovarianceReport, NormalityReport, TightnessReport,
};
use crate::lattice::{Rectangle, Shape, SiteSeed};
use crate::spectral::{exact_sum_variance, fejer_integral, SpectralDensity, QUAD_POINTS_PER_SIDE};

/// Rendered output plus the statistical verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

fn json<T: Serialize>(value: &T, passed: bool) -> Result<Outcome> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    Ok(Outcome { text, passed })
}

fn scalar_spec<'a>(cfg: &'a ExperimentConfig, command: &str) -> Result<&'a LinearFieldSpec> {
    match &cfg.spec {
        FieldSpec::Scalar(s) => Ok(s),
        FieldSpec::Hilbert(_) => Err(Error::InvalidArgument(format!("`{command}` needs a scalar spec"))),
    }
}

pub fn fejer(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec.base();
    let density = SpectralDensity::of(spec);
    let f_zero = density.at_zero();
    let mut text = String::from("shape,exact,quadrature,f_zero,abs_err\n");
    for shape in cfg.shape_list()? {
        let points = cfg
            .quad_points_per_axis
            .unwrap_or(QUAD_POINTS_PER_SIDE * shape.max_side());
        let exact = exact_sum_variance(spec, &shape) / shape.volume() as f64;
        let quad = fejer_integral(&density, &shape, points)?;
        let _ = writeln!(text, "{shape},{exact},{quad},{f_zero},{}", (quad - f_zero).abs());
    }
    Ok(Outcome { text, passed: true })
}

#[derive(Debug, Serialize)]
struct BlockingReport {
    spec_id: String,
    shape: Shape,
    n: usize,
    q: usize,
    m: usize,
    p: usize,
    constant: f64,
    /// `C m q var0 / (n σ²)`.
    bound: f64,
    mc_ratio: f64,
    reps: usize,
    slack: f64,
    identity_max_abs_err: f64,
    identity_max_rel_err: f64,
    passed: bool,
}

pub fn blocking(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec.base();
    let shape = cfg.single_shape()?;
    let reps = cfg.reps_or(200);
    let seed = cfg.seed();
    let n = shape.dims()[0];
    let mix = spec.mixing_profile();
    let plan = schedule(n, &mix)?;
    let sigma2 = crate::spectral::sigma_squared(spec);
    let var0 = pop_moments(spec).variance;
    let constant = small_block_constant(&mix, shape.dim())?;
    let mc_ratio = negligibility_ratio(spec, &shape, &plan, reps, seed)?;
    let bound = small_block_bound(&plan, &mix, var0, shape.cross_volume(), shape.dim())?
        / (sigma2 * n as f64 * shape.cross_volume() as f64);

    let rect = Rectangle::unit_origin(shape.clone());
    let c = truncation_constant(&shape);
    let center = centering_constant(spec, c);
    let mut abs_err: f64 = 0.0;
    let mut rel_err: f64 = 0.0;
    for r in 0..reps as u64 {
        let (truncated, _) = truncate_tail(&sample_linear(spec, &rect, SiteSeed::new(seed, r)), c, center);
        let sums = decompose(&truncated, &plan)?;
        let s = truncated.sum()[0];
        let err = (sums.total()[0] - s).abs();
        abs_err = abs_err.max(err);
        if s != 0.0 {
            rel_err = rel_err.max(err / s.abs());
        }
    }
    let slack = mc_slack(reps);
    let passed = rel_err <= 1e-10 && mc_ratio <= bound * (1.0 + slack);
    json(
        &BlockingReport {
            spec_id: cfg.spec.id(),
            shape,
            n,
            q: plan.q,
            m: plan.m,
            p: plan.p,
            constant,
            bound,
            mc_ratio,
            reps,
            slack,
            identity_max_abs_err: abs_err,
            identity_max_rel_err: rel_err,
            passed,
        },
        passed,
    )
}

pub fn variance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = scalar_spec(cfg, "variance")?;
    let table = variance_convergence(spec, &cfg.shape_list()?, cfg.reps_or(1000), cfg.seed())?;
    let passed = table.all_within && table.exact_gap_nonincreasing;
    json(&table, passed)
}

#[derive(Debug, Serialize)]
struct CltReport {
    spec_id: String,
    shape: Shape,
    reps: usize,
    master_seed: u64,
    sigma2: f64,
    normality: NormalityReport,
}

pub fn clt(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = scalar_spec(cfg, "clt")?;
    let shape = cfg.single_shape()?;
    let sigma2 = crate::spectral::sigma_squared(spec);
    if sigma2 <= 0.0 {
        return Err(Error::Degenerate(
            "degenerate branch, the normalized sum converges to 0 in probability and has no normal limit to test"
                .into(),
        ));
    }
    let reps = cfg.reps_or(1000);
    let e = run_ensemble(&cfg.spec, &shape, reps, cfg.seed())?;
    let normality = normality_test(&e, sigma2)?;
    let passed = normality.passed;
    json(
        &CltReport {
            spec_id: e.spec_id.clone(),
            shape,
            reps,
            master_seed: e.master_seed,
            sigma2,
            normality,
        },
        passed,
    )
}

#[derive(Debug, Serialize)]
struct DirectionReport {
    t: Vec<f64>,
    target_variance: f64,
    ks: f64,
    ks_threshold: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct CovReport {
    spec_id: String,
    shape: Shape,
    reps: usize,
    master_seed: u64,
    estimate: CovarianceReport,
    /// Exact `Σ^{(L)} / vol(L)`.
    analytic: Vec<Vec<f64>>,
    /// Limit `Σ`.
    limit: Vec<Vec<f64>>,
    /// Largest `|σ̂_ij − σ_ij| / SE_ij`.
    max_standardized_deviation: f64,
    directions: Vec<DirectionReport>,
    passed: bool,
}

/// Seeded directions with coordinates uniform on `[-1, 1)`.
pub fn random_directions(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6469_7265_6374_696f);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn cov(cfg: &ExperimentConfig) -> Result<Outcome> {
    let shape = cfg.single_shape()?;
    let reps = cfg.reps_or(1000);
    let seed = cfg.seed();
    let e = run_ensemble(&cfg.spec, &shape, reps, seed)?;
    let est = estimate_cov(&e)?;
    let analytic = analytic_cov(&cfg.spec, &shape);
    if (0..analytic.nrows()).any(|i| analytic[(i, i)] <= 0.0) {
        return Err(Error::Degenerate("a coordinate has zero exact variance".into()));
    }
    let mut worst: f64 = 0.0;
    for (i, (&got, &want)) in est.matrix.iter().zip(analytic.iter()).enumerate() {
        let se = est.standard_errors.as_slice()[i];
        let dev = (got - want).abs();
        worst = worst.max(if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let mut ts = cfg.directions.clone().unwrap_or_default();
    ts.extend(random_directions(cfg.random_directions.unwrap_or(0), est.dim, seed));
    let mut directions = Vec::with_capacity(ts.len());
    for t in ts {
        let r = cramer_wold(&e, &t, &analytic)?;
        directions.push(DirectionReport {
            t,
            target_variance: r.target_variance,
            ks: r.ks,
            ks_threshold: r.ks_threshold,
            passed: r.passed,
        });
    }
    let scale = est.matrix.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let passed = worst <= 4.0
        && est.polarization_residual() <= 1e-12 * scale
        && est.is_psd(1e-10 * scale)
        && directions.iter().all(|d| d.passed);
    let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    };
    json(
        &CovReport {
            spec_id: e.spec_id.clone(),
            shape,
            reps,
            master_seed: seed,
            estimate: est.report(),
            analytic: rows(&analytic),
            limit: rows(&analytic_limit_cov(&cfg.spec)),
            max_standardized_deviation: worst,
            directions,
            passed,
        },
        passed,
    )
}

#[derive(Debug, Serialize)]
struct TightnessOutput {
    spec_id: String,
    #[serde(flatten)]
    report: TightnessReport,
    ratios: Vec<(usize, f64)>,
    nonincreasing: bool,
    within_bounds: bool,
}

pub fn tightness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let FieldSpec::Hilbert(spec) = &cfg.spec else {
        return Err(Error::InvalidArgument("`tightness` needs a spec with `weights`".into()));
    };
    let n_values = cfg
        .n_values
        .clone()
        .unwrap_or_else(|| (1..=spec.n_coords()).collect());
    let report = tightness_profile(spec, &cfg.shape_list()?, &n_values, cfg.reps_or(1000), cfg.seed())?;
    let passed = report.invariants_hold();
    json(
        &TightnessOutput {
            spec_id: cfg.spec.id(),
            ratios: report.ratios(),
            nonincreasing: report.nonincreasing(),
            within_bounds: report.within_bounds(),
            report,
        },
        passed,
    )
}

/// One realization as `k_1..k_d,x_1..x_m` rows, or the ensemble of
/// normalized sums when `reps` is set.
pub fn gen(cfg: &ExperimentConfig) -> Result<Outcome> {
    let shape = cfg.single_shape()?;
    if let Some(reps) = cfg.reps {
        let e = run_ensemble(&cfg.spec, &shape, reps, cfg.seed())?;
        return Ok(Outcome { text: e.to_csv(), passed: true });
    }
    let rect = Rectangle::unit_origin(shape.clone());
    let s = crate::field::sample(&cfg.spec, &rect, SiteSeed::new(cfg.seed(), 0));
    let m = s.components();
    let header: Vec<String> = (1..=shape.dim())
        .map(|u| format!("k_{u}"))
        .chain((1..=m).map(|c| format!("x_{c}")))
        .collect();
    let mut text = header.join(",");
    text.push('\n');
    for (site, x) in rect.sites().zip(s.values().chunks(m)) {
        let row: Vec<String> = site
            .iter()
            .map(|k| k.to_string())
            .chain(x.iter().map(|v| v.to_string()))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    Ok(Outcome { text, passed: true })
}
