//! Lattice geometry and site-keyed randomness.
//!
//! Sites are `d`-tuples of `i64`. Rectangles are iterated in row-major
//! order (last axis fastest), which is also the storage order of every
//! [`FieldSample`](crate::field::FieldSample). Slab intervals along an axis
//! are 1-based and inclusive, relative to the rectangle's origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{InnovationDist, InnovationKind};

/// Side lengths `L_1, ..., L_d` of a lattice box.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    dims: Vec<usize>,
    volume: usize,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("dimension must be at least 1".into()));
        }
        if let Some(u) = dims.iter().position(|&l| l == 0) {
            return Err(Error::InvalidShape(format!(
                "side length on axis {} must be positive",
                u + 1
            )));
        }
        let volume = dims
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or(Error::VolumeOverflow)?;
        Ok(Self { dims, volume })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// `L_1 · ... · L_d`.
    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Product of all side lengths except the first (1 when `d = 1`).
    pub fn cross_volume(&self) -> usize {
        self.volume / self.dims[0]
    }

    pub fn min_side(&self) -> usize {
        self.dims.iter().copied().min().unwrap_or(1)
    }

    pub fn max_side(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for u in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[u] = strides[u + 1] * self.dims[u + 1];
        }
        strides
    }

    /// Parses `L1xL2x...` as used on the command line.
    pub fn parse(text: &str) -> Result<Self> {
        let dims = text
            .split('x')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidShape(format!("cannot parse {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(shape: Shape) -> Self {
        shape.dims
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

/// `Π L_u`, or an error when the product overflows.
pub fn volume(dims: &[usize]) -> Result<usize> {
    Shape::new(dims.to_vec()).map(|s| s.volume())
}

/// A box of sites `origin_u <= k_u < origin_u + L_u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rectangle {
    origin: Vec<i64>,
    shape: Shape,
}

impl Rectangle {
    pub fn new(origin: Vec<i64>, shape: Shape) -> Result<Self> {
        if origin.len() != shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                got: origin.len(),
            });
        }
        Ok(Self { origin, shape })
    }

    /// The summation box `1 <= k_u <= L_u`.
    pub fn unit_origin(shape: Shape) -> Self {
        Self {
            origin: vec![1; shape.dim()],
            shape,
        }
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn volume(&self) -> usize {
        self.shape.volume()
    }

    /// Restricts axis `axis` (1-based) to the 1-based inclusive interval
    /// `[lo, hi]` measured from the origin; other axes are kept in full.
    pub fn slab(&self, axis: usize, lo: i64, hi: i64) -> Result<Rectangle> {
        if axis == 0 || axis > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} outside 1..={}",
                self.dim()
            )));
        }
        let u = axis - 1;
        let len = self.shape.dims[u];
        if lo < 1 || hi < lo || hi > len as i64 {
            return Err(Error::SlabOutOfRange { axis, lo, hi, len });
        }
        let mut origin = self.origin.clone();
        origin[u] += lo - 1;
        let mut dims = self.shape.dims.clone();
        dims[u] = (hi - lo + 1) as usize;
        Ok(Rectangle {
            origin,
            shape: Shape::new(dims)?,
        })
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .zip(&self.origin)
                .zip(self.shape.dims())
                .all(|((&k, &o), &l)| k >= o && k < o + l as i64)
    }

    /// Row-major position of `site`, if it lies in the rectangle.
    pub fn linear_index(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let strides = self.shape.strides();
        Some(
            site.iter()
                .zip(&self.origin)
                .zip(&strides)
                .map(|((&k, &o), &s)| (k - o) as usize * s)
                .sum(),
        )
    }

    pub fn intersect(&self, other: &Rectangle) -> Option<Rectangle> {
        if self.dim() != other.dim() {
            return None;
        }
        let mut origin = Vec::with_capacity(self.dim());
        let mut dims = Vec::with_capacity(self.dim());
        for u in 0..self.dim() {
            let lo = self.origin[u].max(other.origin[u]);
            let hi = (self.origin[u] + self.shape.dims[u] as i64)
                .min(other.origin[u] + other.shape.dims[u] as i64);
            if hi <= lo {
                return None;
            }
            origin.push(lo);
            dims.push((hi - lo) as usize);
        }
        Some(Rectangle {
            origin,
            shape: Shape::new(dims).ok()?,
        })
    }

    /// Sites in row-major order.
    pub fn sites(&self) -> Sites<'_> {
        Sites {
            rect: self,
            next: Some(self.origin.clone()),
        }
    }
}

pub struct Sites<'a> {
    rect: &'a Rectangle,
    next: Option<Vec<i64>>,
}

impl Iterator for Sites<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let dims = self.rect.shape.dims();
        let mut u = dims.len();
        loop {
            if u == 0 {
                break;
            }
            u -= 1;
            succ[u] += 1;
            if succ[u] < self.rect.origin[u] + dims[u] as i64 {
                self.next = Some(succ);
                break;
            }
            succ[u] = self.rect.origin[u];
        }
        Some(current)
    }
}

/// Key for the counter-based innovation stream of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteSeed {
    pub master_seed: u64,
    pub stream_tag: u64,
}

impl SiteSeed {
    pub fn new(master_seed: u64, stream_tag: u64) -> Self {
        Self {
            master_seed,
            stream_tag,
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state ^ mix64(word.wrapping_add(GOLDEN_GAMMA)))
}

/// Per-stream key, hoisted out of the per-site loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StreamKey(u64);

impl StreamKey {
    pub(crate) fn new(seed: SiteSeed, lane: u64) -> Self {
        let mut h = mix64(seed.master_seed ^ 0x6A09_E667_F3BC_C908);
        h = absorb(h, seed.stream_tag);
        h = absorb(h, lane);
        Self(h)
    }

    #[inline]
    pub(crate) fn root(self) -> u64 {
        self.0
    }

    /// Absorbs one more site coordinate; folding all coordinates of a site
    /// in axis order from [`root`](Self::root) gives its site key.
    #[inline]
    pub(crate) fn extend(state: u64, coord: i64) -> u64 {
        absorb(state, coord as u64)
    }

    #[inline]
    pub(crate) fn site_key(self, site: &[i64]) -> u64 {
        site.iter().fold(self.0, |h, &k| Self::extend(h, k))
    }

    #[inline]
    fn draw(site_key: u64, counter: u64) -> u64 {
        absorb(site_key, counter)
    }

    /// One innovation value for an already keyed site.
    #[inline]
    pub(crate) fn innovation(site_key: u64, dist: &InnovationDist) -> f64 {
        let sd = dist.variance.sqrt();
        let bits = Self::draw(site_key, 0);
        match dist.kind {
            InnovationKind::Rademacher => {
                if bits >> 63 == 0 {
                    -sd
                } else {
                    sd
                }
            }
            InnovationKind::CenteredUniform => {
                let u = unit_open_closed(bits);
                (2.0 * u - 1.0) * sd * 3f64.sqrt()
            }
            InnovationKind::StandardNormal => {
                let u1 = unit_open_closed(bits);
                let u2 = unit_open_closed(Self::draw(site_key, 1));
                sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
        }
    }
}

/// Maps 53 high bits to `(0, 1]`.
#[inline]
fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Innovation `ε_site` for the replication keyed by `seed`.
///
/// A pure function of its arguments: the same site gets the same value in
/// every rectangle that contains it.
pub fn site_innovation(seed: SiteSeed, site: &[i64], dist: &InnovationDist) -> f64 {
    site_innovation_lane(seed, 0, site, dist)
}

/// As [`site_innovation`] on an independent lane; vector-valued fields use
/// one lane per coordinate stream.
pub fn site_innovation_lane(seed: SiteSeed, lane: u64, site: &[i64], dist: &InnovationDist) -> f64 {
    let key = StreamKey::new(seed, lane);
    StreamKey::innovation(key.site_key(site), dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn volume_examples() {
        assert_eq!(volume(&[1, 1, 1]).unwrap(), 1);
        assert_eq!(volume(&[10, 10]).unwrap(), 100);
        assert_eq!(volume(&[3, 4, 5]).unwrap(), 60);
    }

    #[test]
    fn volume_overflow_is_an_error() {
        assert_eq!(volume(&[usize::MAX, 2]), Err(Error::VolumeOverflow));
        assert!(matches!(Shape::new(vec![]), Err(Error::InvalidShape(_))));
        assert!(matches!(Shape::new(vec![3, 0]), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn slab_examples() {
        let rect = Rectangle::unit_origin(shape(&[10, 4]));
        let s = rect.slab(1, 3, 5).unwrap();
        assert_eq!(s.shape().dims(), &[3, 4]);
        assert_eq!(s.origin(), &[3, 1]);
        assert_eq!(rect.slab(1, 1, 10).unwrap(), rect);

        let line = Rectangle::unit_origin(shape(&[7]));
        assert_eq!(line.slab(1, 7, 7).unwrap().volume(), 1);
    }

    #[test]
    fn slab_errors() {
        let rect = Rectangle::unit_origin(shape(&[10, 4]));
        assert!(matches!(rect.slab(1, 0, 3), Err(Error::SlabOutOfRange { .. })));
        assert!(matches!(rect.slab(1, 4, 3), Err(Error::SlabOutOfRange { .. })));
        assert!(matches!(rect.slab(2, 1, 5), Err(Error::SlabOutOfRange { .. })));
        assert!(rect.slab(3, 1, 1).is_err());
    }

    #[test]
    fn iteration_is_row_major() {
        let rect = Rectangle::new(vec![-1, 5], shape(&[2, 3])).unwrap();
        let sites: Vec<_> = rect.sites().collect();
        assert_eq!(
            sites,
            vec![
                vec![-1, 5],
                vec![-1, 6],
                vec![-1, 7],
                vec![0, 5],
                vec![0, 6],
                vec![0, 7]
            ]
        );
        for (i, s) in sites.iter().enumerate() {
            assert_eq!(rect.linear_index(s), Some(i));
        }
    }

    #[test]
    fn shape_parse_and_display() {
        let s = Shape::parse("128x64").unwrap();
        assert_eq!(s.dims(), &[128, 64]);
        assert_eq!(s.to_string(), "128x64");
        assert!(Shape::parse("12xa").is_err());
    }

    #[test]
    fn rademacher_support_and_determinism() {
        let dist = InnovationDist::rademacher(1.0);
        let seed = SiteSeed::new(7, 3);
        for k in -50..50 {
            let a = site_innovation(seed, &[k, 2 * k], &dist);
            assert!(a == 1.0 || a == -1.0);
            assert_eq!(a, site_innovation(seed, &[k, 2 * k], &dist));
        }
    }

    #[test]
    fn innovation_mean_over_many_sites() {
        // 4 standard errors of a mean over 10^6 unit-variance draws.
        let n = 1_000_000i64;
        for dist in [
            InnovationDist::standard_normal(1.0),
            InnovationDist::rademacher(1.0),
            InnovationDist::centered_uniform(1.0),
        ] {
            let seed = SiteSeed::new(2024, 0);
            let vals: Vec<f64> = (0..n).map(|k| site_innovation(seed, &[k], &dist)).collect();
            let m = crate::numeric::mean(&vals);
            let v = crate::numeric::mean_of(&vals, |x| x * x);
            assert!(m.abs() <= 4.0 / (n as f64).sqrt(), "{dist:?}: mean {m}");
            assert!((v - 1.0).abs() < 0.01, "{dist:?}: variance {v}");
        }
    }

    #[test]
    fn streams_and_lanes_differ() {
        let dist = InnovationDist::standard_normal(1.0);
        let a = site_innovation(SiteSeed::new(1, 0), &[3], &dist);
        let b = site_innovation(SiteSeed::new(1, 1), &[3], &dist);
        let c = site_innovation_lane(SiteSeed::new(1, 0), 1, &[3], &dist);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn slabs_tile_the_rectangle(len in 1usize..40, cuts in proptest::collection::vec(1usize..40, 0..6), cross in 1usize..5) {
            let rect = Rectangle::unit_origin(shape(&[len, cross]));
            let mut points: Vec<usize> = cuts.into_iter().filter(|&c| c < len).collect();
            points.sort_unstable();
            points.dedup();
            let mut lo = 1usize;
            let mut seen = std::collections::HashSet::new();
            for hi in points.into_iter().chain(std::iter::once(len)) {
                let slab = rect.slab(1, lo as i64, hi as i64).unwrap();
                for s in slab.sites() {
                    prop_assert!(rect.contains(&s));
                    prop_assert!(seen.insert(s));
                }
                lo = hi + 1;
            }
            prop_assert_eq!(seen.len(), rect.volume());
        }

        #[test]
        fn iteration_visits_each_site_once(dims in proptest::collection::vec(1usize..5, 1..4), o in -3i64..3) {
            let rect = Rectangle::new(vec![o; dims.len()], shape(&dims)).unwrap();
            let sites: Vec<_> = rect.sites().collect();
            prop_assert_eq!(sites.len(), rect.volume());
            let set: std::collections::HashSet<_> = sites.iter().cloned().collect();
            prop_assert_eq!(set.len(), sites.len());
        }
    }
}
