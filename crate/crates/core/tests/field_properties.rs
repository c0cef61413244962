use mixlab::field::{sample, FieldSpec, InnovationDist, LinearFieldSpec};
use mixlab::lab::run_ensemble;
use mixlab::lattice::{Rectangle, Shape, SiteSeed};
use mixlab::spectral::{autocovariance, exact_sum_variance};

fn ma2d() -> LinearFieldSpec {
    LinearFieldSpec::separable(&[&[1.0, 0.5], &[1.0, -0.25]], InnovationDist::centered_uniform(1.0)).unwrap()
}

/// Ensemble covariance of `X_k` and `X_{k+h}` against `r(h)`, at two base
/// sites to exercise stationarity.
#[test]
fn lagged_covariances_match_and_vanish_past_range() {
    let spec = ma2d();
    let field: FieldSpec = spec.clone().into();
    let rect = Rectangle::new(vec![-4, 3], Shape::new(vec![10, 10]).unwrap()).unwrap();
    let reps = 4000u64;
    let samples: Vec<_> = (0..reps).map(|r| sample(&field, &rect, SiteSeed::new(21, r))).collect();
    let r0 = autocovariance(&spec, &[0, 0]);
    for base in [[-3i64, 5], [0, 8]] {
        for h in [[0i64, 0], [1, 0], [0, 1], [1, 1], [1, -1], [2, 0], [0, 3], [2, 2]] {
            let other = [base[0] + h[0], base[1] + h[1]];
            let prods: Vec<f64> = samples
                .iter()
                .map(|s| s.value(&base, 0).unwrap() * s.value(&other, 0).unwrap())
                .collect();
            let est = prods.iter().sum::<f64>() / reps as f64;
            let want = autocovariance(&spec, &h);
            let se = r0 * (2.0 / reps as f64).sqrt();
            assert!((est - want).abs() <= 4.0 * se, "base {base:?} h {h:?}: {est} vs {want}");
            if h.iter().any(|x| x.abs() > spec.m_dep() as i64) {
                assert_eq!(want, 0.0);
            }
        }
    }
}

#[test]
fn site_values_do_not_depend_on_the_rectangle() {
    let field: FieldSpec = ma2d().into();
    let seed = SiteSeed::new(5, 2);
    let big = sample(&field, &Rectangle::new(vec![0, 0], Shape::new(vec![20, 20]).unwrap()).unwrap(), seed);
    let small = sample(&field, &Rectangle::new(vec![7, 11], Shape::new(vec![3, 2]).unwrap()).unwrap(), seed);
    for site in small.rect().sites() {
        assert_eq!(small.value(&site, 0), big.value(&site, 0));
    }
}

#[test]
fn monte_carlo_variance_of_two_dimensional_sum() {
    let spec = ma2d();
    let shape = Shape::new(vec![24, 16]).unwrap();
    let reps = 3000;
    let e = run_ensemble(&spec.clone().into(), &shape, reps, 8).unwrap();
    let exact = exact_sum_variance(&spec, &shape) / shape.volume() as f64;
    let mc = e.second_moment(0);
    assert!((mc - exact).abs() <= 4.0 * (2.0 / reps as f64).sqrt() * exact, "{mc} vs {exact}");
}

#[test]
fn degenerate_field_variance_vanishes() {
    let spec = LinearFieldSpec::moving_average(&[1.0, -1.0], InnovationDist::standard_normal(1.0)).unwrap();
    let mut last = f64::INFINITY;
    for n in [10usize, 100, 1000] {
        let shape = Shape::new(vec![n]).unwrap();
        let exact = exact_sum_variance(&spec, &shape) / n as f64;
        assert!((exact - 2.0 / n as f64).abs() <= 1e-15);
        let v = run_ensemble(&spec.clone().into(), &shape, 1000, 3).unwrap().second_moment(0);
        assert!(v <= 3.0 * exact, "n={n}: {v}");
        assert!(v < last);
        last = v;
    }
}

/// `S_4 = ε_0 + 2(ε_1 + ε_2 + ε_3) + ε_4` for Rademacher MA(1) on (4,).
#[test]
fn small_sum_distribution_matches_enumeration() {
    let spec = LinearFieldSpec::moving_average(&[1.0, 1.0], InnovationDist::rademacher(1.0)).unwrap();
    let mut atoms = std::collections::BTreeMap::<i64, f64>::new();
    for pattern in 0u32..32 {
        let e: Vec<i64> = (0..5).map(|b| if pattern >> b & 1 == 1 { 1 } else { -1 }).collect();
        let s = e[0] + 2 * (e[1] + e[2] + e[3]) + e[4];
        *atoms.entry(s).or_default() += 1.0 / 32.0;
    }
    let reps = 8000;
    let e = run_ensemble(&spec.into(), &Shape::new(vec![4]).unwrap(), reps, 17).unwrap();
    let mut counts = std::collections::BTreeMap::<i64, f64>::new();
    for s in e.scalar().unwrap() {
        let k = (s * 2.0).round() as i64;
        assert!((s * 2.0 - k as f64).abs() < 1e-12);
        *counts.entry(k).or_default() += 1.0;
    }
    assert!(counts.keys().all(|k| atoms.contains_key(k)));
    for (k, p) in atoms {
        let freq = counts.get(&k).copied().unwrap_or(0.0) / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se, "atom {k}: {freq} vs {p}");
    }
}
