use nalgebra::DMatrix;
use serde::Serialize;

use super::EnsembleResult;
use crate::error::Result;
use crate::field::FieldSpec;
use crate::lattice::Shape;
use crate::numeric::mean;
use crate::spectral::{exact_sum_variance, sigma_squared};

/// Sample second moments of normalized sums. `γ̂(i, j)` is the second
/// moment of the coordinate difference, so the polarization identity holds
/// on the sample itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub reps: usize,
    pub matrix: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// Standard error of each entry of `matrix`, from the spread of
    /// `s_{r,i} s_{r,j}` over replications.
    pub standard_errors: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub dim: usize,
    pub reps: usize,
    pub matrix: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub polarization_residual: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl CovarianceEstimate {
    /// `max_{i,j} |σ̂_ij − ½(σ̂_ii + σ̂_jj − γ̂(i, j))|`.
    pub fn polarization_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let polar = 0.5 * (self.matrix[(i, i)] + self.matrix[(j, j)] - self.gamma[(i, j)]);
                worst = worst.max((self.matrix[(i, j)] - polar).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn report(&self) -> CovarianceReport {
        CovarianceReport {
            dim: self.dim,
            reps: self.reps,
            matrix: rows(&self.matrix),
            gamma: rows(&self.gamma),
            standard_errors: rows(&self.standard_errors),
            min_eigenvalue: self.min_eigenvalue(),
            polarization_residual: self.polarization_residual(),
        }
    }
}

pub fn estimate_cov(result: &EnsembleResult) -> Result<CovarianceEstimate> {
    let m = result.components;
    let coords: Vec<Vec<f64>> = (0..m).map(|c| result.coordinate(c)).collect();
    let r = result.reps as f64;
    let mut matrix = DMatrix::zeros(m, m);
    let mut gamma = DMatrix::zeros(m, m);
    let mut se = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let prod: Vec<f64> = coords[i].iter().zip(&coords[j]).map(|(a, b)| a * b).collect();
            let diff: Vec<f64> = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b) * (a - b)).collect();
            let mu = mean(&prod);
            let spread: Vec<f64> = prod.iter().map(|p| (p - mu) * (p - mu)).collect();
            let s = (mean(&spread) * r / (r - 1.0) / r).sqrt();
            let g = mean(&diff);
            for (a, b) in [(i, j), (j, i)] {
                matrix[(a, b)] = mu;
                gamma[(a, b)] = g;
                se[(a, b)] = s;
            }
        }
    }
    Ok(CovarianceEstimate {
        dim: m,
        reps: result.reps,
        matrix,
        gamma,
        standard_errors: se,
    })
}

fn lane_cov(spec: &FieldSpec, base_value: f64) -> DMatrix<f64> {
    match spec {
        FieldSpec::Scalar(_) => DMatrix::from_element(1, 1, base_value),
        FieldSpec::Hilbert(h) => {
            let n = h.n_coords();
            DMatrix::from_fn(n, n, |i, j| {
                if h.lanes()[i] == h.lanes()[j] {
                    h.weights()[i] * h.weights()[j] * base_value
                } else {
                    0.0
                }
            })
        }
    }
}

/// Limit matrix `Σ`: `σ_ij = c_i c_j σ²_base` for coordinates on a shared
/// lane, 0 otherwise.
pub fn analytic_limit_cov(spec: &FieldSpec) -> DMatrix<f64> {
    lane_cov(spec, sigma_squared(spec.base()))
}

/// Exact pre-limit matrix `Σ^{(L)} / vol(L)`.
pub fn analytic_cov(spec: &FieldSpec, shape: &Shape) -> DMatrix<f64> {
    lane_cov(spec, exact_sum_variance(spec.base(), shape) / shape.volume() as f64)
}
