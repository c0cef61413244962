use serde::Serialize;

use crate::blocking::small_block_constant;
use crate::error::{Error, Result};
use crate::field::{pop_moments, FieldSpec, HilbertFieldSpec};
use crate::lattice::Shape;

use super::{mc_slack, run_ensemble};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessEntry {
    pub n: usize,
    /// `sup_L Σ_{i≥N} mean_r(s_{r,i}²)` over the tested shapes.
    pub empirical: f64,
    /// `C·Σ_{i≥N} c_i² E X_0²` over the truncated coordinates.
    pub bound: f64,
    /// Closed-form untruncated tail `c_N²/(1−ρ²)·C·E X_0²` when the weights
    /// form a geometric sequence with ratio `ρ < 1`.
    pub geometric_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub n_max: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub shapes: Vec<Shape>,
    /// Small-block constant `C` multiplying the base second moment.
    pub constant: f64,
    pub base_second_moment: f64,
    pub slack: f64,
    pub entries: Vec<TightnessEntry>,
}

impl TightnessReport {
    pub fn nonincreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].empirical <= w[0].empirical)
    }

    pub fn within_bounds(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.empirical <= e.bound * (1.0 + self.slack))
    }

    pub fn invariants_hold(&self) -> bool {
        self.nonincreasing() && self.within_bounds()
    }

    /// `entry(N) / entry(N+1)` for consecutive listed `N`.
    pub fn ratios(&self) -> Vec<(usize, f64)> {
        self.entries
            .windows(2)
            .filter(|w| w[1].n == w[0].n + 1)
            .map(|w| (w[0].n, w[0].empirical / w[1].empirical))
            .collect()
    }
}

fn geometric_ratio(weights: &[f64]) -> Option<f64> {
    if weights.len() < 2 {
        return None;
    }
    let rho = weights[1] / weights[0];
    let geometric = rho < 1.0
        && weights
            .windows(2)
            .all(|w| (w[1] - rho * w[0]).abs() <= 1e-12 * w[0]);
    geometric.then_some(rho)
}

/// Suffix sums `t[k] = Σ_{i≥k} v[i]`, accumulated from the end so the
/// sequence is monotone in floating point as well.
fn suffix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len() + 1];
    for i in (0..v.len()).rev() {
        out[i] = out[i + 1] + v[i];
    }
    out
}

pub fn tightness_profile(
    spec: &HilbertFieldSpec,
    shapes: &[Shape],
    n_values: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<TightnessReport> {
    let n_max = spec.n_coords();
    if let Some(&bad) = n_values.iter().find(|&&n| n == 0 || n > n_max + 1) {
        return Err(Error::InvalidArgument(format!("N = {bad} outside 1..={}", n_max + 1)));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("N values must be strictly increasing".into()));
    }
    if shapes.is_empty() {
        return Err(Error::InvalidArgument("no shapes given".into()));
    }
    let base = spec.base();
    let constant = small_block_constant(&base.mixing_profile(), base.dim())?;
    let var0 = pop_moments(base).variance;
    let field: FieldSpec = spec.clone().into();

    let mut empirical = vec![0.0f64; n_max + 1];
    for shape in shapes {
        let e = run_ensemble(&field, shape, reps, master_seed)?;
        let moments: Vec<f64> = (0..n_max).map(|c| e.second_moment(c)).collect();
        for (sup, tail) in empirical.iter_mut().zip(suffix_sums(&moments)) {
            *sup = sup.max(tail);
        }
    }
    let sq: Vec<f64> = spec.weights().iter().map(|c| c * c).collect();
    let analytic = suffix_sums(&sq);
    let rho = geometric_ratio(spec.weights());

    let entries = n_values
        .iter()
        .map(|&n| TightnessEntry {
            n,
            empirical: empirical[n - 1],
            bound: constant * analytic[n - 1] * var0,
            geometric_bound: rho.map(|r| {
                let c = spec.weights()[0] * r.powi(n as i32 - 1);
                c * c / (1.0 - r * r) * constant * var0
            }),
        })
        .collect();
    Ok(TightnessReport {
        n_max,
        reps,
        master_seed,
        shapes: shapes.to_vec(),
        constant,
        base_second_moment: var0,
        slack: mc_slack(reps),
        entries,
    })
}
