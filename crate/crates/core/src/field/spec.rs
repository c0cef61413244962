use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mixing::MixingProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnovationKind {
    StandardNormal,
    Rademacher,
    CenteredUniform,
}

/// Symmetric, centered innovation law scaled to `variance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationDist {
    pub kind: InnovationKind,
    pub variance: f64,
}

impl InnovationDist {
    pub fn new(kind: InnovationKind, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "innovation variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self { kind, variance })
    }

    pub fn standard_normal(variance: f64) -> Self {
        Self {
            kind: InnovationKind::StandardNormal,
            variance,
        }
    }

    pub fn rademacher(variance: f64) -> Self {
        Self {
            kind: InnovationKind::Rademacher,
            variance,
        }
    }

    pub fn centered_uniform(variance: f64) -> Self {
        Self {
            kind: InnovationKind::CenteredUniform,
            variance,
        }
    }

    /// `E ε⁴ / σ_ε⁴`.
    pub fn kurtosis(&self) -> f64 {
        match self.kind {
            InnovationKind::StandardNormal => 3.0,
            InnovationKind::Rademacher => 1.0,
            InnovationKind::CenteredUniform => 1.8,
        }
    }
}

/// Moving-average field `X_k = Σ_j a_j ε_{k-j}` with finitely supported
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFieldSpec {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, f64>,
    innovation: InnovationDist,
}

impl LinearFieldSpec {
    pub fn new(
        dim: usize,
        coeffs: impl IntoIterator<Item = (Vec<i64>, f64)>,
        innovation: InnovationDist,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        InnovationDist::new(innovation.kind, innovation.variance)?;
        let mut map = BTreeMap::new();
        for (offset, value) in coeffs {
            if offset.len() != dim {
                return Err(Error::InvalidSpec(format!(
                    "offset {offset:?} has dimension {}, expected {dim}",
                    offset.len()
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "coefficient at {offset:?} is not finite"
                )));
            }
            if map.insert(offset.clone(), value).is_some() {
                return Err(Error::InvalidSpec(format!("duplicate offset {offset:?}")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidSpec("coefficient support is empty".into()));
        }
        Ok(Self {
            dim,
            coeffs: map,
            innovation,
        })
    }

    /// I.i.d. field: the single coefficient `a_0 = 1`.
    pub fn iid(dim: usize, innovation: InnovationDist) -> Result<Self> {
        Self::new(dim, [(vec![0; dim], 1.0)], innovation)
    }

    /// 1-D moving average with `a_j = taps[j]`, `j = 0, 1, ...`.
    pub fn moving_average(taps: &[f64], innovation: InnovationDist) -> Result<Self> {
        Self::new(
            1,
            taps.iter().enumerate().map(|(j, &a)| (vec![j as i64], a)),
            innovation,
        )
    }

    /// Tensor product of 1-D tap vectors, one per axis.
    pub fn separable(taps: &[&[f64]], innovation: InnovationDist) -> Result<Self> {
        let mut coeffs: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
        for axis_taps in taps {
            coeffs = coeffs
                .into_iter()
                .flat_map(|(off, a)| {
                    axis_taps.iter().enumerate().map(move |(j, &b)| {
                        let mut o = off.clone();
                        o.push(j as i64);
                        (o, a * b)
                    })
                })
                .collect();
        }
        Self::new(taps.len(), coeffs, innovation)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.coeffs
    }

    pub fn innovation(&self) -> &InnovationDist {
        &self.innovation
    }

    /// Per-axis `(min j_u, max j_u)` over the coefficient support.
    pub fn support_bounds(&self) -> Vec<(i64, i64)> {
        (0..self.dim)
            .map(|u| {
                let lo = self.coeffs.keys().map(|j| j[u]).min().unwrap_or(0);
                let hi = self.coeffs.keys().map(|j| j[u]).max().unwrap_or(0);
                (lo, hi)
            })
            .collect()
    }

    /// Dependence range: values on slabs more than `m_dep` apart along any
    /// axis use disjoint innovations.
    pub fn m_dep(&self) -> usize {
        self.support_bounds()
            .into_iter()
            .map(|(lo, hi)| (hi - lo) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn mixing_profile(&self) -> MixingProfile {
        MixingProfile::m_dependent(self.m_dep())
    }

    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.values().sum()
    }

    pub fn coeff_sum_sq(&self) -> f64 {
        self.coeffs.values().map(|a| a * a).sum()
    }
}

/// Weighted vector field: coordinate `i` is `c_i` times an independent copy
/// of `base` drawn on innovation lane `lanes[i]`. Coordinates sharing a lane
/// are driven by the same innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertFieldSpec {
    base: LinearFieldSpec,
    weights: Vec<f64>,
    lanes: Vec<u64>,
}

impl HilbertFieldSpec {
    pub fn new(base: LinearFieldSpec, weights: Vec<f64>) -> Result<Self> {
        let lanes = (0..weights.len() as u64).collect();
        Self::with_lanes(base, weights, lanes)
    }

    pub fn with_lanes(base: LinearFieldSpec, weights: Vec<f64>, lanes: Vec<u64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpec("at least one coordinate weight required".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpec(format!("weights must be positive, got {w}")));
        }
        if lanes.len() != weights.len() {
            return Err(Error::InvalidSpec(format!(
                "{} lanes given for {} weights",
                lanes.len(),
                weights.len()
            )));
        }
        Ok(Self {
            base,
            weights,
            lanes,
        })
    }

    /// Geometric weights `c_i = 2^{-i}`, `i = 1..=n_coords`.
    pub fn dyadic(base: LinearFieldSpec, n_coords: usize) -> Result<Self> {
        let weights = (1..=n_coords).map(|i| 0.5f64.powi(i as i32)).collect();
        Self::new(base, weights)
    }

    pub fn base(&self) -> &LinearFieldSpec {
        &self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lanes(&self) -> &[u64] {
        &self.lanes
    }

    /// `N_max`.
    pub fn n_coords(&self) -> usize {
        self.weights.len()
    }

    fn default_lanes(&self) -> bool {
        self.lanes.iter().enumerate().all(|(i, &l)| l == i as u64)
    }
}

/// Either a scalar or a weighted vector field; the unit of JSON exchange.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Scalar(LinearFieldSpec),
    Hilbert(HilbertFieldSpec),
}

impl FieldSpec {
    pub fn base(&self) -> &LinearFieldSpec {
        match self {
            FieldSpec::Scalar(s) => s,
            FieldSpec::Hilbert(h) => h.base(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base().dim()
    }

    pub fn components(&self) -> usize {
        match self {
            FieldSpec::Scalar(_) => 1,
            FieldSpec::Hilbert(h) => h.n_coords(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawFieldSpec::from(self)).expect("field spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFieldSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        raw.try_into()
    }

    /// Short stable identifier derived from the canonical JSON form.
    pub fn id(&self) -> String {
        let h = self
            .to_json()
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
                crate::lattice::mix64(h ^ b as u64)
            });
        format!("{h:016x}")
    }
}

impl From<LinearFieldSpec> for FieldSpec {
    fn from(spec: LinearFieldSpec) -> Self {
        FieldSpec::Scalar(spec)
    }
}

impl From<HilbertFieldSpec> for FieldSpec {
    fn from(spec: HilbertFieldSpec) -> Self {
        FieldSpec::Hilbert(spec)
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawFieldSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFieldSpec::deserialize(deserializer)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeff {
    offset: Vec<i64>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFieldSpec {
    dim: usize,
    coeffs: Vec<RawCoeff>,
    innovation: InnovationDist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lanes: Option<Vec<u64>>,
}

impl From<&FieldSpec> for RawFieldSpec {
    fn from(spec: &FieldSpec) -> Self {
        let base = spec.base();
        let coeffs = base
            .coeffs
            .iter()
            .map(|(offset, &value)| RawCoeff {
                offset: offset.clone(),
                value,
            })
            .collect();
        let (weights, lanes) = match spec {
            FieldSpec::Scalar(_) => (None, None),
            FieldSpec::Hilbert(h) => (
                Some(h.weights.clone()),
                (!h.default_lanes()).then(|| h.lanes.clone()),
            ),
        };
        RawFieldSpec {
            dim: base.dim,
            coeffs,
            innovation: base.innovation,
            weights,
            lanes,
        }
    }
}

impl TryFrom<RawFieldSpec> for FieldSpec {
    type Error = Error;

    fn try_from(raw: RawFieldSpec) -> Result<Self> {
        let base = LinearFieldSpec::new(
            raw.dim,
            raw.coeffs.into_iter().map(|c| (c.offset, c.value)),
            raw.innovation,
        )?;
        match (raw.weights, raw.lanes) {
            (None, None) => Ok(FieldSpec::Scalar(base)),
            (None, Some(_)) => Err(Error::InvalidSpec("lanes given without weights".into())),
            (Some(w), None) => Ok(FieldSpec::Hilbert(HilbertFieldSpec::new(base, w)?)),
            (Some(w), Some(l)) => Ok(FieldSpec::Hilbert(HilbertFieldSpec::with_lanes(base, w, l)?)),
        }
    }
}
