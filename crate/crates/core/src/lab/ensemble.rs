use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{sample, FieldSpec};
use crate::lattice::{Rectangle, Shape, SiteSeed};
use crate::numeric::mean;

/// Normalized sums `S_L / √vol(L)`, one per replication; replication `r`
/// draws with stream tag `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub spec_id: String,
    pub shape: Shape,
    pub reps: usize,
    pub master_seed: u64,
    pub components: usize,
    sums: Vec<f64>,
}

impl EnsembleResult {
    /// Wraps precomputed normalized sums (`reps × components`, row-major).
    pub fn from_sums(spec_id: String, shape: Shape, master_seed: u64, components: usize, sums: Vec<f64>) -> Result<Self> {
        if components == 0 || !sums.len().is_multiple_of(components) {
            return Err(Error::InvalidArgument("sums length is not a multiple of components".into()));
        }
        let reps = sums.len() / components;
        if reps < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 replications, got {reps}")));
        }
        Ok(Self {
            spec_id,
            shape,
            reps,
            master_seed,
            components,
            sums,
        })
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn replication(&self, r: usize) -> &[f64] {
        &self.sums[r * self.components..(r + 1) * self.components]
    }

    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.sums.iter().skip(c).step_by(self.components).copied().collect()
    }

    /// Scalar ensemble as a flat vector.
    pub fn scalar(&self) -> Result<Vec<f64>> {
        if self.components != 1 {
            return Err(Error::InvalidArgument(format!(
                "scalar ensemble expected, got {} components",
                self.components
            )));
        }
        Ok(self.sums.clone())
    }

    /// `t · s_r` for every replication.
    pub fn project(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.components {
            return Err(Error::DimensionMismatch {
                expected: self.components,
                got: t.len(),
            });
        }
        Ok(self
            .sums
            .chunks(self.components)
            .map(|s| s.iter().zip(t).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Ensemble second moment of coordinate `c`, the variance estimate for a
    /// centered sum.
    pub fn second_moment(&self, c: usize) -> f64 {
        let sq: Vec<f64> = self.coordinate(c).iter().map(|x| x * x).collect();
        mean(&sq)
    }

    /// One row per replication: `rep,s_1,...,s_m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rep");
        for c in 1..=self.components {
            out.push_str(&format!(",s_{c}"));
        }
        out.push('\n');
        for r in 0..self.reps {
            out.push_str(&r.to_string());
            for v in self.replication(r) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_ensemble(spec: &FieldSpec, shape: &Shape, reps: usize, master_seed: u64) -> Result<EnsembleResult> {
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {reps}")));
    }
    if spec.dim() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: shape.dim(),
        });
    }
    let rect = Rectangle::unit_origin(shape.clone());
    let scale = (shape.volume() as f64).sqrt();
    let per_rep: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let s = sample(spec, &rect, SiteSeed::new(master_seed, r));
            s.sum().into_iter().map(|x| x / scale).collect()
        })
        .collect();
    Ok(EnsembleResult {
        spec_id: spec.id(),
        shape: shape.clone(),
        reps,
        master_seed,
        components: spec.components(),
        sums: per_rep.into_iter().flatten().collect(),
    })
}
