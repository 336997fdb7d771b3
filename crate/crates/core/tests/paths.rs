//! Piecewise-linear driver paths and iterated integrals along them.

mod common;

use common::{path_integral_oracle, rel_err};
use proptest::prelude::*;
use svie_cubature::moments::IteratedIntegralSpec;
use svie_cubature::path::{
    cell_coefficient, ordered_cells, path_iterated_integral, weighted_path_expectation, ConcatenatedPath,
    PiecewiseLinearPath,
};
use svie_cubature::{Error, Kernel};

fn path1(start: f64, delta: f64, slopes: &[f64]) -> PiecewiseLinearPath {
    PiecewiseLinearPath::new(start, delta, slopes.iter().map(|a| vec![*a]).collect()).unwrap()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn value_and_increment() {
    let p = path1(1.0, 0.25, &[2.0, -1.0]);
    // speed a/√δ = 2a; segment length 1/8.
    assert!((p.value(1, 1.125) - 0.5).abs() < 1e-15);
    assert!((p.value(1, 1.25) - 0.25).abs() < 1e-15);
    assert!((p.increment(1) - 0.25).abs() < 1e-15);
    assert!((p.value(0, 1.2) - 0.2).abs() < 1e-15);
    assert_eq!(p.value(1, 0.0), 0.0);
    assert!((p.value(1, 9.0) - 0.25).abs() < 1e-15);
    assert_eq!(p.mirrored().slopes, vec![vec![-2.0], vec![1.0]]);
}

#[test]
fn invalid_paths_are_rejected() {
    assert!(matches!(PiecewiseLinearPath::new(0.0, 0.0, vec![vec![1.0]]), Err(Error::Domain(_))));
    assert!(PiecewiseLinearPath::new(0.0, 1.0, vec![]).is_err());
    assert!(PiecewiseLinearPath::new(0.0, 1.0, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    assert!(PiecewiseLinearPath::new(0.0, 1.0, vec![vec![f64::NAN]]).is_err());
    let a = path1(0.0, 1.0, &[1.0]);
    let gap = path1(1.5, 1.0, &[1.0]);
    assert!(ConcatenatedPath::new(vec![a, gap]).is_err());
    assert!(ConcatenatedPath::new(vec![]).is_err());
}

#[test]
fn interval_and_driver_mismatches_are_rejected() {
    let p = path1(0.0, 1.0, &[1.0, 2.0]);
    let wrong = IteratedIntegralSpec::word(vec![1, 1], 0.0, 2.0).unwrap();
    assert!(path_iterated_integral(&wrong, &p).is_err());
    let two = IteratedIntegralSpec::word(vec![2], 0.0, 1.0).unwrap();
    assert!(path_iterated_integral(&two, &p).is_err());
    let k = Kernel::power(1.5).unwrap();
    let s = IteratedIntegralSpec::kernel_chain(k, &[0, 1], vec![1, 1], 0.0, 1.0).unwrap();
    assert!(cell_coefficient(&s, 2, &[0, 1]).is_err());
    assert!(cell_coefficient(&s, 2, &[2, 0]).is_err());
}

#[test]
fn ordered_cell_count() {
    for (n, l) in [(1, 3), (2, 2), (2, 4), (4, 4), (3, 5)] {
        let cells = ordered_cells(n, l);
        assert_eq!(cells.len(), binomial(n + l - 1, n));
        assert!(cells.iter().all(|c| c.windows(2).all(|w| w[0] >= w[1])));
    }
}

#[test]
fn plain_words_along_a_path() {
    // ∫∫ dω dω = ω_T²/2 and ∫ dt dω = ∫ (T − t) dω.
    let p = path1(0.0, 2.0, &[1.5, -0.5, 2.0]);
    let s = IteratedIntegralSpec::word(vec![1, 1], 0.0, 2.0).unwrap();
    let x = p.increment(1);
    assert!((path_iterated_integral(&s, &p).unwrap() - 0.5 * x * x).abs() < 1e-13);
    let s0 = IteratedIntegralSpec::word(vec![0, 1], 0.0, 2.0).unwrap();
    let oracle = path_integral_oracle(&s0, &p, 8);
    assert!((path_iterated_integral(&s0, &p).unwrap() - oracle).abs() < 1e-13);
}

#[test]
fn kernel_integrals_match_nested_quadrature() {
    let k = Kernel::power(1.5).unwrap();
    let p = path1(0.0, 1.0, &[-3.0, 0.7, -0.6, 0.12]);
    for anchors in [[0, 0, 0, 0], [0, 1, 2, 3], [0, 0, 1, 2], [0, 1, 1, 3]] {
        let s = IteratedIntegralSpec::kernel_chain(k, &anchors, vec![1, 1, 1, 1], 0.0, 1.0).unwrap();
        let v = path_iterated_integral(&s, &p).unwrap();
        let oracle = path_integral_oracle(&s, &p, 6);
        assert!((v - oracle).abs() < 1e-12 * oracle.abs().max(1e-3), "{anchors:?}: {v} vs {oracle}");
    }
    // Fractional kernel exponent: the oracle converges more slowly.
    let k = Kernel::power(1.2).unwrap();
    let p = path1(0.3, 0.8, &[1.0, -2.0]);
    let s = IteratedIntegralSpec::kernel_chain(k, &[0, 1], vec![1, 1], 0.3, 1.1).unwrap();
    let v = path_iterated_integral(&s, &p).unwrap();
    let oracle = path_integral_oracle(&s, &p, 40);
    assert!(rel_err(v, oracle) < 1e-5, "{v} vs {oracle}");
}

#[test]
fn two_driver_word() {
    let p = PiecewiseLinearPath::new(0.0, 1.0, vec![vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
    let s = IteratedIntegralSpec::word(vec![1, 2], 0.0, 1.0).unwrap();
    let oracle = path_integral_oracle(&s, &p, 6);
    assert!((path_iterated_integral(&s, &p).unwrap() - oracle).abs() < 1e-13);
}

#[test]
fn weighted_expectation_is_the_weighted_sum() {
    let k = Kernel::power(2.5).unwrap();
    let s = IteratedIntegralSpec::kernel_chain(k, &[0, 0], vec![1, 1], 0.0, 1.0).unwrap();
    let a = path1(0.0, 1.0, &[1.0, 2.0]);
    let b = path1(0.0, 1.0, &[-0.5, 0.3]);
    let direct = 0.3 * path_iterated_integral(&s, &a).unwrap() + 0.7 * path_iterated_integral(&s, &b).unwrap();
    let w = weighted_path_expectation(&s, &[(0.3, a), (0.7, b)]).unwrap();
    assert!((w - direct).abs() < 1e-14);
    assert_eq!(weighted_path_expectation(&s, &[]).unwrap(), 0.0);
}

fn slopes(l: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Reversing the path flips the sign of an integral with an odd number
    /// of Brownian letters.
    #[test]
    fn mirror_symmetry(a in slopes(3), h in prop_oneof![Just(1.5f64), Just(2.5), Just(3.5)], anchors in prop_oneof![Just(vec![0usize, 0, 0]), Just(vec![0, 1, 2]), Just(vec![0, 0, 1])]) {
        let k = Kernel::power(h).unwrap();
        let p = path1(0.0, 1.0, &a);
        let s = IteratedIntegralSpec::kernel_chain(k, &anchors, vec![1, 0, 1], 0.0, 1.0).unwrap();
        let s3 = IteratedIntegralSpec::kernel_chain(k, &anchors, vec![1, 1, 1], 0.0, 1.0).unwrap();
        let even = path_iterated_integral(&s, &p).unwrap();
        let even_m = path_iterated_integral(&s, &p.mirrored()).unwrap();
        let odd = path_iterated_integral(&s3, &p).unwrap();
        let odd_m = path_iterated_integral(&s3, &p.mirrored()).unwrap();
        prop_assert!((even - even_m).abs() <= 1e-12 * even.abs().max(1.0));
        prop_assert!((odd + odd_m).abs() <= 1e-12 * odd.abs().max(1.0));
    }

    /// Slopes are dimensionless: the same slopes on `[0, cδ]` scale the
    /// integral by `c^p`.
    #[test]
    fn path_integral_scaling(a in slopes(2), h in 0.6f64..3.0, c in 0.2f64..5.0) {
        let k = Kernel::power(h).unwrap();
        let s = IteratedIntegralSpec::kernel_chain(k, &[0, 0], vec![1, 1], 0.0, 1.0).unwrap();
        let v = path_iterated_integral(&s, &path1(0.0, 1.0, &a)).unwrap();
        let vc = path_iterated_integral(&s.on_interval(0.0, c).unwrap(), &path1(0.0, c, &a)).unwrap();
        prop_assert!((vc - c.powf(s.scaling_power()) * v).abs() <= 1e-10 * vc.abs().max(1e-10));
    }

    /// Concatenated values are continuous and add period increments.
    #[test]
    fn concatenation_adds_increments(a in slopes(2), b in slopes(3), delta in 0.1f64..2.0, u in 0.0f64..1.0) {
        let p = path1(0.0, delta, &a);
        let q = path1(delta, delta, &b);
        let c = ConcatenatedPath::new(vec![p.clone(), q.clone()]).unwrap();
        prop_assert!((c.value(1, 2.0 * delta) - p.increment(1) - q.increment(1)).abs() < 1e-12);
        prop_assert!((c.value(1, delta) - p.increment(1)).abs() < 1e-12);
        let t = delta * (1.0 + u);
        prop_assert!((c.value(1, t) - p.increment(1) - q.value(1, t)).abs() < 1e-12);
        prop_assert!((c.value(0, t) - t).abs() < 1e-12);
    }

    /// Iterated integrals of a plain word obey Chen's identity across a split.
    #[test]
    fn chen_identity_for_level_two(a in slopes(2), b in slopes(2)) {
        let p = path1(0.0, 1.0, &a);
        let q = path1(1.0, 1.0, &b);
        let joined = path1(0.0, 2.0, &[a[0], a[1], b[0], b[1]].map(|x| x * 2f64.sqrt()));
        let s = |w: Vec<usize>, lo, hi| IteratedIntegralSpec::word(w, lo, hi).unwrap();
        let whole = path_iterated_integral(&s(vec![0, 1], 0.0, 2.0), &joined).unwrap();
        let first = path_iterated_integral(&s(vec![0, 1], 0.0, 1.0), &p).unwrap();
        let second = path_iterated_integral(&s(vec![0, 1], 1.0, 2.0), &q).unwrap();
        // ∫_0^2 (2 − t) dω = ∫_0^1 (1 − t) dω + ∫_1^2 (2 − t) dω + 1·ω(0,1).
        prop_assert!((whole - (first + second + p.increment(1))).abs() < 1e-12);
    }
}
