//! Fejér kernels, exact second-order structure of linear fields, and the
//! spectral-density limit of `E S_L² / vol(L)`.
//!
//! Densities are parameterized by frequencies `λ ∈ [-π, π]^d` directly and
//! integrated against the normalized measure `m = Lebesgue / (2π)^d`, so
//! the limit variance is the density at `λ = 0`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::LinearFieldSpec;
use crate::lattice::Shape;
use crate::numeric::pairwise_sum;

/// Below this `|λ|` the kernel is evaluated from its trigonometric sum.
const SMALL_FREQUENCY: f64 = 1e-6;

/// Minimum midpoint nodes per axis, per unit of the longest side.
pub const QUAD_POINTS_PER_SIDE: usize = 64;

/// `K_{n-1}(λ) = |Σ_{j<n} e^{ijλ}|² / n = sin²(nλ/2) / (n sin²(λ/2))`.
pub fn fejer_kernel(n: usize, lambda: f64) -> f64 {
    assert!(n >= 1, "Fejér kernel needs n >= 1");
    let nf = n as f64;
    if lambda.abs() < SMALL_FREQUENCY {
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..n {
            let (s, c) = (j as f64 * lambda).sin_cos();
            re += c;
            im += s;
        }
        return (re * re + im * im) / nf;
    }
    let num = (nf * lambda / 2.0).sin();
    let den = (lambda / 2.0).sin();
    num * num / (nf * den * den)
}

/// `G_L(λ) = Π_u K_{L_u - 1}(λ_u)`.
pub fn multivariate_fejer(shape: &Shape, lambda: &[f64]) -> f64 {
    assert_eq!(shape.dim(), lambda.len(), "frequency dimension mismatch");
    shape
        .dims()
        .iter()
        .zip(lambda)
        .map(|(&l, &x)| fejer_kernel(l, x))
        .product()
}

/// Autocovariance `r(h) = E X_0 X_h` of a linear field, stored on its
/// finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFunction {
    values: BTreeMap<Vec<i64>, f64>,
}

impl CovarianceFunction {
    /// `r(h) = σ_ε² Σ_j a_j a_{j+h}`.
    pub fn of(spec: &LinearFieldSpec) -> Self {
        let var = spec.innovation().variance;
        let mut values: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (j, &a) in spec.coeffs() {
            for (i, &b) in spec.coeffs() {
                let h: Vec<i64> = i.iter().zip(j).map(|(x, y)| x - y).collect();
                *values.entry(h).or_insert(0.0) += a * b;
            }
        }
        for v in values.values_mut() {
            *v *= var;
        }
        Self { values }
    }

    pub fn at(&self, h: &[i64]) -> f64 {
        self.values.get(h).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &f64)> {
        self.values.iter()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn autocovariance(spec: &LinearFieldSpec, h: &[i64]) -> f64 {
    CovarianceFunction::of(spec).at(h)
}

/// `E S(X, L)² = Σ_h Π_u (L_u - |h_u|)_+ r(h)`.
pub fn exact_sum_variance(spec: &LinearFieldSpec, shape: &Shape) -> f64 {
    assert_eq!(spec.dim(), shape.dim(), "shape and field dimensions differ");
    CovarianceFunction::of(spec)
        .iter()
        .map(|(h, r)| {
            let overlap: f64 = h
                .iter()
                .zip(shape.dims())
                .map(|(&hu, &l)| (l as i64 - hu.abs()).max(0) as f64)
                .product();
            overlap * r
        })
        .sum()
}

/// `Σ_h Π_u (1 - |h_u|/L_u)_+ r(h)`: the Fejér-weighted covariance sum,
/// equal to `E S_L² / vol(L)`.
pub fn fejer_weighted_covariance(spec: &LinearFieldSpec, shape: &Shape) -> f64 {
    CovarianceFunction::of(spec)
        .iter()
        .map(|(h, r)| {
            let w: f64 = h
                .iter()
                .zip(shape.dims())
                .map(|(&hu, &l)| (1.0 - hu.unsigned_abs() as f64 / l as f64).max(0.0))
                .product();
            w * r
        })
        .sum()
}

/// Spectral density relative to the normalized measure on `[-π, π]^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    Constant { dim: usize, value: f64 },
    /// `f(λ) = σ_ε² |Σ_j a_j e^{i j·λ}|²`.
    Linear {
        terms: Vec<(Vec<f64>, f64)>,
        variance: f64,
    },
}

impl SpectralDensity {
    pub fn constant(dim: usize, value: f64) -> Self {
        SpectralDensity::Constant { dim, value }
    }

    pub fn of(spec: &LinearFieldSpec) -> Self {
        SpectralDensity::Linear {
            terms: spec
                .coeffs()
                .iter()
                .map(|(j, &a)| (j.iter().map(|&x| x as f64).collect(), a))
                .collect(),
            variance: spec.innovation().variance,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralDensity::Constant { dim, .. } => *dim,
            SpectralDensity::Linear { terms, .. } => terms[0].0.len(),
        }
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        match self {
            SpectralDensity::Constant { value, .. } => *value,
            SpectralDensity::Linear { terms, variance } => {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, a) in terms {
                    let phase: f64 = j.iter().zip(lambda).map(|(x, y)| x * y).sum();
                    let (s, c) = phase.sin_cos();
                    re += a * c;
                    im += a * s;
                }
                variance * (re * re + im * im)
            }
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(&vec![0.0; self.dim()])
    }
}

/// Tensor-product midpoint quadrature of `∫ G_L f dm`.
///
/// Needs at least `64 · max L_u` nodes per axis. For trigonometric
/// polynomial densities of degree below the node count the rule is exact
/// up to rounding. Partial sums are collected per first-axis node and
/// reduced pairwise, so the result does not depend on the thread count.
pub fn fejer_integral(f: &SpectralDensity, shape: &Shape, quad_points_per_axis: usize) -> Result<f64> {
    if f.dim() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            got: f.dim(),
        });
    }
    let required = QUAD_POINTS_PER_SIDE * shape.max_side();
    if quad_points_per_axis < required {
        return Err(Error::QuadratureResolution {
            points: quad_points_per_axis,
            required,
        });
    }
    let m = quad_points_per_axis;
    let d = shape.dim();
    let h = std::f64::consts::TAU / m as f64;
    let nodes: Vec<f64> = (0..m)
        .map(|k| -std::f64::consts::PI + (k as f64 + 0.5) * h)
        .collect();
    let kernels: Vec<Vec<f64>> = shape
        .dims()
        .iter()
        .map(|&l| nodes.iter().map(|&x| fejer_kernel(l, x)).collect())
        .collect();

    let inner_count = m.pow((d - 1) as u32);
    let partials: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k0| {
            let mut lambda = vec![0.0; d];
            lambda[0] = nodes[k0];
            let mut idx = vec![0usize; d - 1];
            let mut terms = Vec::with_capacity(inner_count);
            for _ in 0..inner_count {
                let mut g = kernels[0][k0];
                for (u, &i) in idx.iter().enumerate() {
                    lambda[u + 1] = nodes[i];
                    g *= kernels[u + 1][i];
                }
                terms.push(g * f.eval(&lambda));
                for u in (0..idx.len()).rev() {
                    idx[u] += 1;
                    if idx[u] < m {
                        break;
                    }
                    idx[u] = 0;
                }
            }
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&partials) / (m as f64).powi(d as i32))
}

/// `σ² = f(0) = σ_ε² (Σ_j a_j)²`.
pub fn sigma_squared(spec: &LinearFieldSpec) -> f64 {
    let s = spec.coeff_sum();
    spec.innovation().variance * s * s
}

/// Bias bound `|E S_L²/vol − f(0)| <= 2 · max|r| · m_dep · Σ_u 1/L_u`.
pub fn fejer_bias_bound(spec: &LinearFieldSpec, shape: &Shape) -> f64 {
    let r_max = CovarianceFunction::of(spec).max_abs();
    let inv: f64 = shape.dims().iter().map(|&l| 1.0 / l as f64).sum();
    2.0 * r_max * spec.m_dep() as f64 * inv
}
