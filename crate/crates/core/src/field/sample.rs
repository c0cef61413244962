use serde::Serialize;

use super::spec::{FieldSpec, HilbertFieldSpec, LinearFieldSpec};
use crate::lattice::{Rectangle, Shape, SiteSeed, StreamKey};
use crate::numeric::pairwise_sum;

/// Realized field values on a rectangle, site-major and row-major:
/// component `c` of the `i`-th site is `values[i * components + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    rect: Rectangle,
    components: usize,
    values: Vec<f64>,
}

impl FieldSample {
    pub fn from_values(rect: Rectangle, components: usize, values: Vec<f64>) -> crate::Result<Self> {
        let expected = rect.volume() * components;
        if components == 0 || values.len() != expected {
            return Err(crate::Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            rect,
            components,
            values,
        })
    }

    pub fn rect(&self) -> &Rectangle {
        &self.rect
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, site: &[i64], component: usize) -> Option<f64> {
        let i = self.rect.linear_index(site)?;
        self.values.get(i * self.components + component).copied()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.components)
            .copied()
            .collect()
    }

    /// Rectangular sum `S(X, L)` per component.
    pub fn sum(&self) -> Vec<f64> {
        sum_components(&self.values, self.components)
    }

    /// Sum over the first-axis rows `lo..=hi` (1-based), all other axes in
    /// full. Rows are contiguous in row-major storage.
    pub fn row_range_sum(&self, lo: usize, hi: usize) -> Vec<f64> {
        let row = self.rect.shape().cross_volume() * self.components;
        sum_components(&self.values[(lo - 1) * row..hi * row], self.components)
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> FieldSample {
        FieldSample {
            rect: self.rect.clone(),
            components: self.components,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }
}

pub(crate) fn sum_components(values: &[f64], components: usize) -> Vec<f64> {
    if components == 1 {
        return vec![pairwise_sum(values)];
    }
    (0..components)
        .map(|c| {
            let col: Vec<f64> = values.iter().skip(c).step_by(components).copied().collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// Draws `spec` on `rect` for the replication keyed by `seed`.
pub fn sample(spec: &FieldSpec, rect: &Rectangle, seed: SiteSeed) -> FieldSample {
    match spec {
        FieldSpec::Scalar(s) => sample_linear(s, rect, seed),
        FieldSpec::Hilbert(h) => sample_hilbert(h, rect, seed),
    }
}

pub fn sample_linear(spec: &LinearFieldSpec, rect: &Rectangle, seed: SiteSeed) -> FieldSample {
    let mut values = vec![0.0; rect.volume()];
    fill_lane(spec, rect, StreamKey::new(seed, 0), 1.0, &mut values, 1, 0);
    FieldSample {
        rect: rect.clone(),
        components: 1,
        values,
    }
}

pub fn sample_hilbert(spec: &HilbertFieldSpec, rect: &Rectangle, seed: SiteSeed) -> FieldSample {
    let n = spec.n_coords();
    let mut values = vec![0.0; rect.volume() * n];
    for (c, (&w, &lane)) in spec.weights().iter().zip(spec.lanes()).enumerate() {
        fill_lane(spec.base(), rect, StreamKey::new(seed, lane), w, &mut values, n, c);
    }
    FieldSample {
        rect: rect.clone(),
        components: n,
        values,
    }
}

/// Writes `weight · Σ_j a_j ε_{k-j}` into component `comp` of `out`.
///
/// Innovations are generated once on the support-dilated box
/// `[origin - max j, origin + L - 1 - min j]`, so each value is the pure
/// site-keyed draw regardless of which rectangle is requested.
fn fill_lane(
    spec: &LinearFieldSpec,
    rect: &Rectangle,
    key: StreamKey,
    weight: f64,
    out: &mut [f64],
    comps: usize,
    comp: usize,
) {
    assert_eq!(rect.dim(), spec.dim(), "rectangle and field dimensions differ");
    let d = rect.dim();
    let bounds = spec.support_bounds();
    let dims = rect.shape().dims();
    let dil_origin: Vec<i64> = (0..d).map(|u| rect.origin()[u] - bounds[u].1).collect();
    let dil_dims: Vec<usize> = (0..d)
        .map(|u| dims[u] + (bounds[u].1 - bounds[u].0) as usize)
        .collect();
    let dil_shape = Shape::new(dil_dims.clone()).expect("dilated box volume fits");
    let dil_strides = dil_shape.strides();

    let eps = innovations_on_box(key, &dil_origin, &dil_dims, spec.innovation());

    let terms: Vec<(usize, f64)> = spec
        .coeffs()
        .iter()
        .map(|(j, &a)| {
            let off = (0..d)
                .map(|u| (bounds[u].1 - j[u]) as usize * dil_strides[u])
                .sum();
            (off, a)
        })
        .collect();

    let last = dims[d - 1];
    let rows = rect.volume() / last;
    let mut idx = vec![0usize; d - 1];
    for row in 0..rows {
        let base: usize = idx.iter().zip(&dil_strides).map(|(i, s)| i * s).sum();
        let out_row = &mut out[row * last * comps..(row + 1) * last * comps];
        for t in 0..last {
            let b = base + t;
            let mut x = 0.0;
            for &(off, a) in &terms {
                x += a * eps[b + off];
            }
            out_row[t * comps + comp] = weight * x;
        }
        advance(&mut idx, &dims[..d - 1]);
    }
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for u in (0..idx.len()).rev() {
        idx[u] += 1;
        if idx[u] < dims[u] {
            return;
        }
        idx[u] = 0;
    }
}

fn innovations_on_box(
    key: StreamKey,
    origin: &[i64],
    dims: &[usize],
    dist: &super::InnovationDist,
) -> Vec<f64> {
    let d = dims.len();
    let last = dims[d - 1];
    let rows: usize = dims[..d - 1].iter().product();
    let mut eps = Vec::with_capacity(rows * last);
    let mut idx = vec![0usize; d - 1];
    for _ in 0..rows {
        let prefix = idx
            .iter()
            .zip(origin)
            .fold(key.root(), |h, (&i, &o)| StreamKey::extend(h, o + i as i64));
        for t in 0..last {
            let site_key = StreamKey::extend(prefix, origin[d - 1] + t as i64);
            eps.push(StreamKey::innovation(site_key, dist));
        }
        advance(&mut idx, &dims[..d - 1]);
    }
    eps
}

/// Truncation level `c_n = (L_2 ⋯ L_d)^{1/4}`; for `d = 1` the convention
/// `c_n = L_1^{1/4}` keeps `c_n → ∞`.
pub fn truncation_constant(shape: &Shape) -> f64 {
    let base = if shape.dim() == 1 {
        shape.dims()[0]
    } else {
        shape.cross_volume()
    };
    (base as f64).sqrt().sqrt()
}

/// `E X_0 1(|X_0| <= c)`. Every offered innovation law is symmetric, hence
/// so is the law of `X_0`, and the constant vanishes.
pub fn centering_constant(_spec: &LinearFieldSpec, _c: f64) -> f64 {
    0.0
}

/// Splits a sample into the bounded part `X 1(|X| <= c) - center` and the
/// tail `X - truncated`.
pub fn truncate_tail(sample: &FieldSample, c: f64, center: f64) -> (FieldSample, FieldSample) {
    let truncated = sample.map(|x| (if x.abs() <= c { x } else { 0.0 }) - center);
    let tail = FieldSample {
        rect: sample.rect.clone(),
        components: sample.components,
        values: sample
            .values
            .iter()
            .zip(&truncated.values)
            .map(|(&x, &t)| x - t)
            .collect(),
    };
    (truncated, tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E X_0⁴`, exact for linear fields.
    pub fourth_moment: f64,
}

/// Population moments of `X_0`:
/// `E X_0² = σ_ε² Σ a_j²` and
/// `E X_0⁴ = 3σ_ε⁴ (Σ a_j²)² + (κ − 3) σ_ε⁴ Σ a_j⁴` with `κ` the innovation
/// kurtosis.
pub fn pop_moments(spec: &LinearFieldSpec) -> PopMoments {
    let var = spec.innovation().variance;
    let s2 = spec.coeff_sum_sq();
    let s4: f64 = spec.coeffs().values().map(|a| a.powi(4)).sum();
    let kurt = spec.innovation().kurtosis();
    PopMoments {
        mean: 0.0,
        variance: var * s2,
        fourth_moment: var * var * (3.0 * s2 * s2 + (kurt - 3.0) * s4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::InnovationDist;
    use crate::lattice::site_innovation;
    use proptest::prelude::*;

    fn rect(origin: &[i64], dims: &[usize]) -> Rectangle {
        Rectangle::new(origin.to_vec(), Shape::new(dims.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn identity_coefficients_give_raw_innovations() {
        let dist = InnovationDist::standard_normal(2.0);
        let spec = LinearFieldSpec::iid(2, dist).unwrap();
        let r = rect(&[-3, 4], &[5, 6]);
        let seed = SiteSeed::new(11, 2);
        let s = sample_linear(&spec, &r, seed);
        for (i, site) in r.sites().enumerate() {
            assert_eq!(s.values()[i], site_innovation(seed, &site, &dist));
        }
    }

    #[test]
    fn moving_average_matches_direct_convolution() {
        let dist = InnovationDist::centered_uniform(1.0);
        let spec = LinearFieldSpec::new(
            2,
            [(vec![0, 0], 1.0), (vec![1, -1], -0.5), (vec![-2, 1], 0.25)],
            dist,
        )
        .unwrap();
        let r = rect(&[1, 1], &[4, 3]);
        let seed = SiteSeed::new(5, 0);
        let s = sample_linear(&spec, &r, seed);
        for (i, k) in r.sites().enumerate() {
            let direct: f64 = spec
                .coeffs()
                .iter()
                .map(|(j, a)| a * site_innovation(seed, &[k[0] - j[0], k[1] - j[1]], &dist))
                .sum();
            assert!((s.values()[i] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn overlapping_rectangles_agree() {
        let spec: FieldSpec = LinearFieldSpec::separable(&[&[1.0, 1.0], &[1.0, -2.0]], InnovationDist::rademacher(1.0))
            .unwrap()
            .into();
        let a = rect(&[0, 0], &[8, 8]);
        let b = rect(&[5, -2], &[6, 5]);
        let seed = SiteSeed::new(99, 7);
        let sa = sample(&spec, &a, seed);
        let sb = sample(&spec, &b, seed);
        let inter = a.intersect(&b).unwrap();
        assert_eq!(inter.volume(), 3 * 3);
        for site in inter.sites() {
            assert_eq!(sa.value(&site, 0), sb.value(&site, 0));
        }
    }

    #[test]
    fn hilbert_coordinates_are_weighted_lanes() {
        let base = LinearFieldSpec::moving_average(&[1.0, 1.0], InnovationDist::rademacher(1.0)).unwrap();
        let spec = HilbertFieldSpec::with_lanes(base.clone(), vec![1.0, 0.5, 1.0], vec![0, 1, 0]).unwrap();
        let r = rect(&[1], &[10]);
        let seed = SiteSeed::new(3, 4);
        let s = sample_hilbert(&spec, &r, seed);
        let plain = sample_linear(&base, &r, seed);
        assert_eq!(s.component(0), plain.values());
        assert_eq!(s.component(2), plain.values());
        assert_ne!(s.component(1).iter().map(|x| x * 2.0).collect::<Vec<_>>(), plain.values());
    }

    #[test]
    fn truncation_constant_examples() {
        assert_eq!(truncation_constant(&Shape::new(vec![7, 16]).unwrap()), 2.0);
        assert_eq!(truncation_constant(&Shape::new(vec![7, 1, 1]).unwrap()), 1.0);
        assert_eq!(truncation_constant(&Shape::new(vec![81]).unwrap()), 3.0);
    }

    #[test]
    fn truncate_examples() {
        let r = rect(&[1], &[3]);
        let s = FieldSample::from_values(r.clone(), 1, vec![0.5, -1.0, 1.5]).unwrap();
        let (t, tail) = truncate_tail(&s, 2.0, 0.0);
        assert_eq!(t.values(), s.values());
        assert_eq!(tail.values(), &[0.0, 0.0, 0.0]);

        let s = FieldSample::from_values(r, 1, vec![5.0, -2.0, -2.5]).unwrap();
        let (t, tail) = truncate_tail(&s, 2.0, 0.0);
        assert_eq!(t.values(), &[0.0, -2.0, 0.0]);
        assert_eq!(tail.values(), &[5.0, 0.0, -2.5]);
    }

    #[test]
    fn pop_moment_examples() {
        let iid = LinearFieldSpec::iid(1, InnovationDist::standard_normal(1.0)).unwrap();
        assert_eq!(pop_moments(&iid).variance, 1.0);
        assert_eq!(pop_moments(&iid).fourth_moment, 3.0);
        let ma = LinearFieldSpec::moving_average(&[1.0, 1.0], InnovationDist::standard_normal(1.0)).unwrap();
        assert_eq!(pop_moments(&ma).variance, 2.0);
        let rad = LinearFieldSpec::iid(1, InnovationDist::rademacher(1.0)).unwrap();
        assert_eq!(pop_moments(&rad).fourth_moment, 1.0);
        // Rademacher MA(1): X ∈ {-2, 0, 2} w.p. (1/4, 1/2, 1/4), E X⁴ = 8.
        let rad_ma = LinearFieldSpec::moving_average(&[1.0, 1.0], InnovationDist::rademacher(1.0)).unwrap();
        assert_eq!(pop_moments(&rad_ma).fourth_moment, 8.0);
    }

    #[test]
    fn symmetric_law_centering_is_zero() {
        // Rademacher MA(1) takes {-2, 0, 2} with probabilities (1/4, 1/2, 1/4):
        // E X 1(|X| <= c) = 0 for every c.
        let spec = LinearFieldSpec::moving_average(&[1.0, 1.0], InnovationDist::rademacher(1.0)).unwrap();
        let atoms = [(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)];
        for c in [0.5, 1.0, 2.0, 3.0] {
            let exact: f64 = atoms.iter().filter(|(x, _)| f64::abs(*x) <= c).map(|(x, p)| x * p).sum();
            assert_eq!(exact, centering_constant(&spec, c));
        }
    }

    proptest! {
        #[test]
        fn truncation_identity(values in proptest::collection::vec(-10.0f64..10.0, 1..50), c in 0.01f64..5.0) {
            let r = rect(&[1], &[values.len()]);
            let s = FieldSample::from_values(r, 1, values.clone()).unwrap();
            let (t, tail) = truncate_tail(&s, c, 0.0);
            for ((x, a), b) in values.iter().zip(t.values()).zip(tail.values()) {
                prop_assert_eq!(a + b, *x);
                prop_assert!(a.abs() <= 2.0 * c);
            }
        }

        #[test]
        fn centered_truncation_is_bounded(values in proptest::collection::vec(-10.0f64..10.0, 1..50), c in 0.01f64..5.0, f in -1.0f64..1.0) {
            let center = f * c;
            let r = rect(&[1], &[values.len()]);
            let s = FieldSample::from_values(r, 1, values.clone()).unwrap();
            let (t, tail) = truncate_tail(&s, c, center);
            for ((x, a), b) in values.iter().zip(t.values()).zip(tail.values()) {
                prop_assert!((a + b - x).abs() <= f64::EPSILON * x.abs().max(c) * 4.0);
                prop_assert!(a.abs() <= 2.0 * c);
            }
        }
    }
}
