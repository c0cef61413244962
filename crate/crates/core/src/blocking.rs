//! Bernstein blocking along the first axis.
//!
//! For a first-axis length `n`:
//!
//! * `q = ⌊n^{1/4}⌋` (small-block length),
//! * `m = ⌊min{q, n^{1/10}, α(q)^{-1/5}}⌋` (number of block pairs; the
//!   `α` term is dropped when `α(q) = 0`),
//! * `p = ⌈n/m⌉ − q` (big-block length), which satisfies
//!   `m(p − 1 + q) < n <= m(p + q)`.
//!
//! Big block `k` covers rows `[(k−1)(p+q)+1, kp+(k−1)q]`, small block `k`
//! covers `[kp+(k−1)q+1, k(p+q)]`, and the last small block is cut at `n`.
//! Callers who want to block along another axis permute axes first.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{
    centering_constant, sample_linear, sum_components, truncate_tail, truncation_constant,
    FieldSample, LinearFieldSpec, MixingProfile,
};
use crate::lattice::{Rectangle, Shape, SiteSeed};
use crate::spectral::sigma_squared;

/// Inclusive 1-based interval of first-axis rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockRange {
    pub lo: usize,
    pub hi: usize,
}

impl BlockRange {
    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockingPlan {
    pub n: usize,
    pub q: usize,
    pub m: usize,
    pub p: usize,
    pub big_ranges: Vec<BlockRange>,
    pub small_ranges: Vec<BlockRange>,
}

impl BlockingPlan {
    /// Builds the plan for given `q` and `m`, deriving `p = ⌈n/m⌉ − q`.
    pub fn new(n: usize, q: usize, m: usize) -> Result<Self> {
        if q == 0 || m == 0 {
            return Err(Error::Blocking(format!("q = {q} and m = {m} must be positive")));
        }
        if m > q {
            return Err(Error::Blocking(format!("m = {m} exceeds q = {q}")));
        }
        let p = n.div_ceil(m) as i64 - q as i64;
        if p < 1 {
            return Err(Error::Blocking(format!(
                "n = {n} gives big-block length p = {p} < 1 (q = {q}, m = {m})"
            )));
        }
        let p = p as usize;
        if !(m * (p - 1 + q) < n && n <= m * (p + q)) {
            return Err(Error::Blocking(format!(
                "m(p-1+q) < n <= m(p+q) fails for n = {n}, q = {q}, m = {m}, p = {p}"
            )));
        }
        let mut big_ranges = Vec::with_capacity(m);
        let mut small_ranges = Vec::with_capacity(m);
        for k in 1..=m {
            big_ranges.push(BlockRange {
                lo: (k - 1) * (p + q) + 1,
                hi: k * p + (k - 1) * q,
            });
            small_ranges.push(BlockRange {
                lo: k * p + (k - 1) * q + 1,
                hi: if k < m { k * (p + q) } else { n },
            });
        }
        Ok(Self {
            n,
            q,
            m,
            p,
            big_ranges,
            small_ranges,
        })
    }

    /// The `2m` ranges in first-axis order.
    pub fn ranges(&self) -> impl Iterator<Item = BlockRange> + '_ {
        self.big_ranges
            .iter()
            .zip(&self.small_ranges)
            .flat_map(|(&b, &s)| [b, s])
    }
}

/// `⌊n^{1/k}⌋` in exact integer arithmetic.
fn integer_root(n: usize, k: u32) -> usize {
    let n = n as u128;
    let mut r = (n as f64).powf(1.0 / k as f64) as u128;
    while (r + 1).pow(k) <= n {
        r += 1;
    }
    while r > 0 && r.pow(k) > n {
        r -= 1;
    }
    r as usize
}

/// `⌊α^{-1/5}⌋`, checked with `k⁵ α <= 1`.
fn alpha_term(alpha: f64) -> usize {
    let mut k = alpha.powf(-0.2).floor() as usize;
    while ((k + 1) as f64).powi(5) * alpha <= 1.0 {
        k += 1;
    }
    while k > 0 && (k as f64).powi(5) * alpha > 1.0 {
        k -= 1;
    }
    k
}

pub fn schedule(n: usize, mix: &MixingProfile) -> Result<BlockingPlan> {
    if n < 2 {
        return Err(Error::Blocking(format!("n = {n} is below the minimum 2")));
    }
    let q = integer_root(n, 4);
    let mut m = q.min(integer_root(n, 10));
    let alpha = mix.alpha(q);
    if alpha > 0.0 {
        m = m.min(alpha_term(alpha));
    }
    BlockingPlan::new(n, q, m)
}

/// Per-block slab sums; each entry holds one value per field component.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    pub big: Vec<Vec<f64>>,
    pub small: Vec<Vec<f64>>,
}

impl BlockSums {
    fn reduce(blocks: &[Vec<f64>]) -> Vec<f64> {
        let comps = blocks.first().map_or(0, |b| b.len());
        let flat: Vec<f64> = blocks.iter().flatten().copied().collect();
        sum_components(&flat, comps)
    }

    pub fn big_total(&self) -> Vec<f64> {
        Self::reduce(&self.big)
    }

    pub fn small_total(&self) -> Vec<f64> {
        Self::reduce(&self.small)
    }

    /// `Σ U_k + Σ V_k`.
    pub fn total(&self) -> Vec<f64> {
        self.big_total()
            .iter()
            .zip(self.small_total())
            .map(|(u, v)| u + v)
            .collect()
    }
}

/// Big-block sums `U_k` and small-block sums `V_k` of a sample whose first
/// axis has length `plan.n`.
pub fn decompose(sample: &FieldSample, plan: &BlockingPlan) -> Result<BlockSums> {
    let n = sample.rect().shape().dims()[0];
    if n != plan.n {
        return Err(Error::DimensionMismatch {
            expected: plan.n,
            got: n,
        });
    }
    let sums = |ranges: &[BlockRange]| -> Vec<Vec<f64>> {
        ranges
            .par_iter()
            .map(|r| sample.row_range_sum(r.lo, r.hi))
            .collect()
    };
    Ok(BlockSums {
        big: sums(&plan.big_ranges),
        small: sums(&plan.small_ranges),
    })
}

/// `C = j^d ((1 + ρ′(j)) / (1 − ρ′(j)))^d` at `j = j*`.
pub fn small_block_constant(mix: &MixingProfile, d: usize) -> Result<f64> {
    let j = mix.j_star();
    let rho = mix.rho_prime(j);
    if rho >= 1.0 {
        return Err(Error::MixingHypothesis { lag: j, value: rho });
    }
    Ok(((j as f64) * (1.0 + rho) / (1.0 - rho)).powi(d as i32))
}

/// `C · m · q · cross_volume · var0`, the bound on `E|Σ V_k|²`.
pub fn small_block_bound(
    plan: &BlockingPlan,
    mix: &MixingProfile,
    var0: f64,
    cross_volume: usize,
    d: usize,
) -> Result<f64> {
    let c = small_block_constant(mix, d)?;
    Ok(c * plan.m as f64 * plan.q as f64 * cross_volume as f64 * var0)
}

/// Monte Carlo estimate of `E|Σ_k V_k|² / (σ² · n · L_2 ⋯ L_d)` on the
/// truncated field.
///
/// Only the small-block slabs are drawn; site-keyed innovations make them
/// identical to the corresponding rows of a full-rectangle draw.
pub fn negligibility_ratio(
    spec: &LinearFieldSpec,
    shape: &Shape,
    plan: &BlockingPlan,
    reps: usize,
    master_seed: u64,
) -> Result<f64> {
    let sigma2 = sigma_squared(spec);
    if sigma2 <= 0.0 {
        return Err(Error::Degenerate(
            "small-block ratio is normalized by sigma^2; use the Chebyshev branch".into(),
        ));
    }
    if shape.dims()[0] != plan.n {
        return Err(Error::DimensionMismatch {
            expected: plan.n,
            got: shape.dims()[0],
        });
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one replication required".into()));
    }
    let rect = Rectangle::unit_origin(shape.clone());
    let c = truncation_constant(shape);
    let center = centering_constant(spec, c);
    let slabs: Vec<Rectangle> = plan
        .small_ranges
        .iter()
        .map(|r| rect.slab(1, r.lo as i64, r.hi as i64))
        .collect::<Result<_>>()?;
    let squares: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let seed = SiteSeed::new(master_seed, r);
            let v: f64 = slabs
                .iter()
                .map(|slab| {
                    let (truncated, _) = truncate_tail(&sample_linear(spec, slab, seed), c, center);
                    truncated.sum()[0]
                })
                .sum();
            v * v
        })
        .collect();
    let mean_sq = crate::numeric::mean(&squares);
    Ok(mean_sq / (sigma2 * plan.n as f64 * shape.cross_volume() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::InnovationDist;

    fn alpha_zero() -> MixingProfile {
        MixingProfile::m_dependent(0)
    }

    #[test]
    fn schedule_examples() {
        let p = schedule(10_000, &MixingProfile::m_dependent(1)).unwrap();
        assert_eq!((p.q, p.m, p.p), (10, 2, 4990));

        let p = schedule(16, &MixingProfile::m_dependent(1)).unwrap();
        assert_eq!((p.q, p.m, p.p), (2, 1, 14));

        let quarter = MixingProfile::tabulated(vec![0.25], vec![1.0]).unwrap();
        let p = schedule(2, &quarter).unwrap();
        assert_eq!((p.q, p.m, p.p), (1, 1, 1));
    }

    #[test]
    fn alpha_term_limits_m() {
        // α(q) = 1/32 gives α^{-1/5} = 2 exactly.
        assert_eq!(alpha_term(1.0 / 32.0), 2);
        assert_eq!(alpha_term(0.25), 1);
        let strong = MixingProfile::tabulated(vec![0.25; 20], vec![1.0; 20]).unwrap();
        let p = schedule(10_000, &strong).unwrap();
        assert_eq!((p.q, p.m), (10, 1));
    }

    #[test]
    fn integer_roots_are_exact() {
        assert_eq!(integer_root(16, 4), 2);
        assert_eq!(integer_root(15, 4), 1);
        assert_eq!(integer_root(83_521, 4), 17);
        assert_eq!(integer_root(83_520, 4), 16);
        assert_eq!(integer_root(1024, 10), 2);
        assert_eq!(integer_root(1023, 10), 1);
    }

    #[test]
    fn too_small_n() {
        assert!(matches!(schedule(1, &alpha_zero()), Err(Error::Blocking(_))));
        assert!(matches!(schedule(0, &alpha_zero()), Err(Error::Blocking(_))));
        assert!(matches!(BlockingPlan::new(5, 3, 2), Err(Error::Blocking(_))));
    }

    #[test]
    fn partition_is_exact_for_small_n() {
        for n in 2..=5000 {
            let plan = schedule(n, &alpha_zero()).unwrap();
            let mut next = 1;
            for r in plan.ranges() {
                assert_eq!(r.lo, next, "n = {n}");
                assert!(r.hi >= r.lo);
                next = r.hi + 1;
            }
            assert_eq!(next, n + 1);
            for (b, s) in plan.big_ranges.iter().zip(&plan.small_ranges) {
                assert_eq!(b.len(), plan.p);
                assert!(s.len() <= plan.q);
            }
        }
    }

    fn all_ones(dims: &[usize]) -> FieldSample {
        let shape = Shape::new(dims.to_vec()).unwrap();
        let vol = shape.volume();
        FieldSample::from_values(Rectangle::unit_origin(shape), 1, vec![1.0; vol]).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let plan = schedule(16, &alpha_zero()).unwrap();
        let s = all_ones(&[16, 3, 5]);
        let sums = decompose(&s, &plan).unwrap();
        assert_eq!(sums.big, vec![vec![14.0 * 15.0]]);
        assert_eq!(sums.small, vec![vec![2.0 * 15.0]]);
        assert_eq!(sums.total(), vec![16.0 * 15.0]);

        let shape = Shape::new(vec![16, 2]).unwrap();
        let zero = FieldSample::from_values(Rectangle::unit_origin(shape), 1, vec![0.0; 32]).unwrap();
        let sums = decompose(&zero, &plan).unwrap();
        assert!(sums.big.iter().chain(&sums.small).all(|b| b[0] == 0.0));

        assert!(matches!(decompose(&all_ones(&[15]), &plan), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bound_examples() {
        let ma = MixingProfile::m_dependent(1);
        assert_eq!(small_block_constant(&ma, 1).unwrap(), 2.0);
        assert_eq!(small_block_constant(&MixingProfile::m_dependent(0), 2).unwrap(), 1.0);
        let plan = schedule(10_000, &ma).unwrap();
        assert_eq!(small_block_bound(&plan, &ma, 2.0, 1, 1).unwrap(), 80.0);
        let p = MixingProfile::tabulated(vec![], vec![0.5]).unwrap();
        assert_eq!(small_block_constant(&p, 1).unwrap(), 3.0);
    }

    #[test]
    fn negligibility_for_iid_matches_mq_over_n() {
        let spec = LinearFieldSpec::iid(1, InnovationDist::standard_normal(1.0)).unwrap();
        let shape = Shape::new(vec![1296]).unwrap();
        let plan = schedule(1296, &spec.mixing_profile()).unwrap();
        let small_len: usize = plan.small_ranges.iter().map(|r| r.len()).sum();
        let reps = 4000;
        let ratio = negligibility_ratio(&spec, &shape, &plan, reps, 17).unwrap();
        let expected = small_len as f64 / 1296.0;
        assert!(small_len <= plan.m * plan.q);
        assert!((ratio - expected).abs() <= 4.0 * (2.0 / reps as f64).sqrt() * expected);
    }

    #[test]
    fn negligibility_rejects_degenerate_field() {
        let spec = LinearFieldSpec::moving_average(&[1.0, -1.0], InnovationDist::standard_normal(1.0)).unwrap();
        let shape = Shape::new(vec![100]).unwrap();
        let plan = schedule(100, &spec.mixing_profile()).unwrap();
        assert!(matches!(
            negligibility_ratio(&spec, &shape, &plan, 10, 0),
            Err(Error::Degenerate(_))
        ));
    }
}
