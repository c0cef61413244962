use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, LinearFieldSpec};
use crate::lattice::Shape;
use crate::spectral::{exact_sum_variance, sigma_squared};

use super::run_ensemble;

/// Side length of a non-leading axis as a function of the leading side `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum GrowthRule {
    /// `n`
    Same,
    /// `⌈√n⌉`
    CeilSqrt,
    /// `⌈n^e⌉`, `e > 0`
    Power(f64),
    /// Fixed side; never diverges, so always rejected.
    Constant(usize),
}

impl GrowthRule {
    fn check(&self) -> Result<()> {
        match *self {
            GrowthRule::Same | GrowthRule::CeilSqrt => Ok(()),
            GrowthRule::Power(e) if e > 0.0 && e.is_finite() => Ok(()),
            GrowthRule::Power(e) => Err(Error::InvalidArgument(format!("growth exponent {e} does not diverge"))),
            GrowthRule::Constant(k) => Err(Error::InvalidArgument(format!("constant side {k} does not diverge"))),
        }
    }

    pub fn side(&self, n: usize) -> usize {
        let side = match *self {
            GrowthRule::Same => n,
            GrowthRule::CeilSqrt => {
                let r = n.isqrt();
                if r * r == n {
                    r
                } else {
                    r + 1
                }
            }
            GrowthRule::Power(e) => (n as f64).powf(e).ceil() as usize,
            GrowthRule::Constant(k) => k,
        };
        side.max(1)
    }
}

/// Shapes `L^{(n)}`, `n = 1..=n_max`, with `L_u = n` on axis `u` (1-based)
/// and the remaining axes driven by `rules` (one per other axis, or a single
/// rule applied to all of them).
pub fn shape_schedule(d: usize, axis: usize, n_max: usize, rules: &[GrowthRule]) -> Result<Vec<Shape>> {
    if d == 0 || axis == 0 || axis > d {
        return Err(Error::InvalidArgument(format!("axis {axis} outside 1..={d}")));
    }
    let others = d - 1;
    let rules: Vec<GrowthRule> = match rules.len() {
        _ if others == 0 => Vec::new(),
        1 => vec![rules[0]; others],
        k if k == others => rules.to_vec(),
        k => {
            return Err(Error::InvalidArgument(format!(
                "expected 1 or {others} growth rules, got {k}"
            )))
        }
    };
    for r in &rules {
        r.check()?;
    }
    (1..=n_max)
        .map(|n| {
            let mut rest = rules.iter().map(|r| r.side(n));
            let dims = (1..=d)
                .map(|v| if v == axis { n } else { rest.next().unwrap_or(n) })
                .collect();
            Shape::new(dims)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub shape: Shape,
    /// `E S² / vol` from the covariance function.
    pub exact: f64,
    /// Ensemble second moment of `S / √vol`.
    pub mc: f64,
    /// Gaussian approximation `√(2/R)·exact` of the estimator's spread.
    pub mc_se: f64,
    pub sigma2: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceTable {
    pub reps: usize,
    pub master_seed: u64,
    pub rows: Vec<VarianceRow>,
    /// `|exact − σ²|` never grows along the sequence.
    pub exact_gap_nonincreasing: bool,
    pub all_within: bool,
}

pub fn variance_convergence(spec: &LinearFieldSpec, shapes: &[Shape], reps: usize, master_seed: u64) -> Result<VarianceTable> {
    if shapes.windows(2).any(|w| w[1].min_side() < w[0].min_side()) {
        return Err(Error::InvalidArgument("shapes must be nondecreasing in min side".into()));
    }
    let sigma2 = sigma_squared(spec);
    let field: FieldSpec = spec.clone().into();
    let mut rows = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let exact = exact_sum_variance(spec, shape) / shape.volume() as f64;
        let mc = run_ensemble(&field, shape, reps, master_seed)?.second_moment(0);
        let mc_se = (2.0 / reps as f64).sqrt() * exact;
        rows.push(VarianceRow {
            shape: shape.clone(),
            exact,
            mc,
            mc_se,
            sigma2,
            within: (mc - exact).abs() <= 4.0 * mc_se,
        });
    }
    let tol = 1e-12 * sigma2.abs().max(1.0);
    let exact_gap_nonincreasing = rows
        .windows(2)
        .all(|w| (w[1].exact - sigma2).abs() <= (w[0].exact - sigma2).abs() + tol);
    let all_within = rows.iter().all(|r| r.within);
    Ok(VarianceTable {
        reps,
        master_seed,
        rows,
        exact_gap_nonincreasing,
        all_within,
    })
}
