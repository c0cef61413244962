use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::lab::{shape_schedule, GrowthRule};
use crate::lattice::Shape;

/// Anisotropic sweep: `L_axis = n` for `n = n_min..=n_max`, other axes by rule.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub axis: usize,
    #[serde(default = "one")]
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default)]
    pub rules: Vec<GrowthRule>,
}

fn one() -> usize {
    1
}

/// One experiment. Only `spec` is always required; each subcommand reads
/// the fields it needs and rejects the config if they are missing.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: FieldSpec,
    #[serde(default)]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub shapes: Option<Vec<Shape>>,
    #[serde(default)]
    pub shape_schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub n_values: Option<Vec<usize>>,
    /// Explicit Cramér–Wold directions.
    #[serde(default)]
    pub directions: Option<Vec<Vec<f64>>>,
    /// Number of additional seeded random directions.
    #[serde(default)]
    pub random_directions: Option<usize>,
    #[serde(default)]
    pub quad_points_per_axis: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let d = self.spec.dim();
        for s in self.shape.iter().chain(self.shapes.iter().flatten()) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
            }
        }
        if let Some(s) = &self.shape_schedule {
            if s.n_min == 0 || s.n_min > s.n_max {
                return Err(Error::InvalidArgument(format!(
                    "shape_schedule range {}..={} is empty",
                    s.n_min, s.n_max
                )));
            }
        }
        Ok(())
    }

    /// The single shape for commands that run on one rectangle.
    pub fn single_shape(&self) -> Result<Shape> {
        self.shape
            .clone()
            .ok_or_else(|| Error::InvalidArgument("config needs `shape` (or --shape)".into()))
    }

    /// Shape list from `shapes`, else `shape_schedule`, else `[shape]`.
    pub fn shape_list(&self) -> Result<Vec<Shape>> {
        if let Some(list) = &self.shapes {
            if list.is_empty() {
                return Err(Error::InvalidArgument("`shapes` is empty".into()));
            }
            return Ok(list.clone());
        }
        if let Some(s) = &self.shape_schedule {
            let all = shape_schedule(self.spec.dim(), s.axis, s.n_max, &s.rules)?;
            return Ok(all.into_iter().skip(s.n_min - 1).collect());
        }
        Ok(vec![self.single_shape()?])
    }

    pub fn reps_or(&self, default: usize) -> usize {
        self.reps.unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
