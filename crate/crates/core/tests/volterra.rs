//! The deterministic Volterra solve along driver paths, and model set-up.

mod common;

use std::sync::Arc;

use common::{gauss_legendre, integrate};
use proptest::prelude::*;
use svie_cubature::model::{CoeffFn, UFunc};
use svie_cubature::path::{ConcatenatedPath, PiecewiseLinearPath};
use svie_cubature::volterra::{solve_along_path, write_trajectory_csv, SolveGrid};
use svie_cubature::{validate_hypotheses, Error, Kernel, ModelSpec, SVIEModel};

fn path1(delta: f64, slopes: &[f64]) -> ConcatenatedPath {
    ConcatenatedPath::single(PiecewiseLinearPath::new(0.0, delta, slopes.iter().map(|a| vec![*a]).collect()).unwrap())
}

/// Driver value at `t` written out from the slopes, without the library.
fn omega(t: f64, delta: f64, slopes: &[f64]) -> f64 {
    let seg = delta / slopes.len() as f64;
    let mut acc = 0.0;
    for (l, a) in slopes.iter().enumerate() {
        let lo = l as f64 * seg;
        if t > lo {
            acc += a / delta.sqrt() * (t - lo).min(seg);
        }
    }
    acc
}

/// Straightforward transcription of the midpoint scheme for a 1-D model
/// `X = x0 + ∫ K V(X) dω` (no drift).
fn midpoint_oracle(h: f64, v: impl Fn(f64) -> f64, x0: f64, d: usize, delta: f64, slopes: &[f64]) -> f64 {
    let step = delta / d as f64;
    let w: Vec<f64> = (0..=d).map(|a| omega(a as f64 * step, delta, slopes)).collect();
    let mut x = vec![x0];
    for l in 1..=d {
        let mut s = x0;
        for a in 0..l {
            let prev = if a == 0 { 0.0 } else { w[a - 1] };
            let k = ((l - a) as f64 * step).powf(h - 0.5);
            s += k * v(x[a]) * 0.5 * (w[a + 1] - prev);
        }
        x.push(s);
    }
    x[d]
}

#[test]
fn matches_a_direct_transcription_of_the_scheme() {
    let slopes = [1.2, -0.4, 2.0, -1.5];
    for (h, d) in [(1.5, 40), (0.8, 100), (2.5, 12)] {
        let model = SVIEModel::cos_1d(Kernel::power(h).unwrap(), 0.3).unwrap();
        let grid = SolveGrid::new(d, 0.7).unwrap();
        let x = solve_along_path(&model, &path1(0.7, &slopes), &grid, false).unwrap().terminal[0];
        let oracle = midpoint_oracle(h, f64::cos, 0.3, d, 0.7, &slopes);
        assert!((x - oracle).abs() < 1e-13, "H={h}: {x} vs {oracle}");
    }
}

#[test]
fn constant_kernel_sum_telescopes() {
    // Σ (ω_{α+1} − ω_{α−1})/2 = (ω_D + ω_{D−1})/2 with ω_{−h} = 0.
    let slopes = [1.0, -2.0, 0.5];
    let (t, d) = (1.5, 30);
    let model = SVIEModel::linear_1d(Kernel::One, 0.25).unwrap();
    let grid = SolveGrid::new(d, t).unwrap();
    let x = solve_along_path(&model, &path1(t, &slopes), &grid, false).unwrap().terminal[0];
    let h = t / d as f64;
    let expected = 0.25 + 0.5 * (omega(t, t, &slopes) + omega(t - h, t, &slopes));
    assert!((x - expected).abs() < 1e-14);
}

fn linear_errors(h: f64, steps: &[usize]) -> Vec<f64> {
    // X_T = x0 + ∫ (T − r)^{H−1/2} dω_r for V ≡ 1.
    let t = 1.0;
    let slopes = [-3.0, 0.7, -0.6, 0.12];
    let gl = gauss_legendre(30);
    let seg = t / 4.0;
    // u = T − r = w² smooths the fractional power at the right end.
    let exact: f64 = (0..4)
        .map(|l| {
            let (lo, hi) = (t - (l + 1) as f64 * seg, t - l as f64 * seg);
            integrate(|w| 2.0 * w * w.powf(2.0 * h - 1.0) * slopes[l] / t.sqrt(), lo.sqrt(), hi.sqrt(), 8, &gl)
        })
        .sum();
    let model = SVIEModel::linear_1d(Kernel::power(h).unwrap(), 0.0).unwrap();
    steps
        .iter()
        .map(|&d| {
            let grid = SolveGrid::new(d, t).unwrap();
            let x = solve_along_path(&model, &path1(t, &slopes), &grid, false).unwrap().terminal[0];
            (x - exact).abs()
        })
        .collect()
}

#[test]
fn linear_model_converges_to_the_path_integral() {
    // A linear kernel is integrated exactly once kinks sit on grid nodes.
    assert!(linear_errors(1.5, &[4, 40]).iter().all(|e| *e < 1e-13));
    let errs = linear_errors(1.2, &[40, 160, 640]);
    assert!(errs[2] < 1e-3, "{errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn trajectory_and_csv() {
    let model = SVIEModel::heston(Kernel::power(1.5).unwrap(), 0.5, 1.0, 1.0, UFunc::U, UFunc::Cos, UFunc::Cos, UFunc::Affine { a: 0.5, b: -1.0 / 3.0 }).unwrap();
    let path = ConcatenatedPath::single(PiecewiseLinearPath::new(0.0, 1.0, vec![vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap());
    let grid = SolveGrid::new(10, 1.0).unwrap();
    let sol = solve_along_path(&model, &path, &grid, true).unwrap();
    let traj = sol.trajectory.unwrap();
    assert_eq!(traj.len(), 11);
    assert_eq!(traj[0], vec![1.0, 1.0]);
    assert_eq!(traj[10], sol.terminal);
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &grid, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1,x2");
    assert_eq!(lines.len(), 12);
}

#[test]
fn grid_and_path_mismatches() {
    assert!(matches!(SolveGrid::new(0, 1.0), Err(Error::Domain(_))));
    assert!(SolveGrid::new(10, -1.0).is_err());
    let grid = SolveGrid::new(10, 1.0).unwrap();
    assert!(grid.alignment_warning(4).is_some());
    assert!(grid.alignment_warning(5).is_none());
    let model = SVIEModel::linear_1d(Kernel::One, 0.0).unwrap();
    assert!(solve_along_path(&model, &path1(2.0, &[1.0]), &grid, false).is_err());
    let two = ConcatenatedPath::single(PiecewiseLinearPath::new(0.0, 1.0, vec![vec![1.0, 1.0]]).unwrap());
    assert!(solve_along_path(&model, &two, &grid, false).is_err());
}

#[test]
fn blow_up_is_reported() {
    let v: CoeffFn = Arc::new(|x| x[0] * x[0]);
    let model = SVIEModel::new(vec![Kernel::One], vec![vec![None, Some(v)]], vec![vec![1.0]], vec![1.0]).unwrap();
    let grid = SolveGrid::new(200, 1.0).unwrap();
    match solve_along_path(&model, &path1(1.0, &[1e3]), &grid, false) {
        Err(Error::NonFinite { coord, .. }) => assert_eq!(coord, 0),
        other => panic!("expected a non-finite state, got {other:?}"),
    }
}

#[test]
fn model_validation() {
    let one: CoeffFn = Arc::new(|_| 1.0);
    let bad_corr = SVIEModel::new(
        vec![Kernel::One],
        vec![vec![None, Some(one.clone()), None]],
        vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        vec![0.0],
    );
    assert!(matches!(bad_corr, Err(Error::Model(_))));
    assert!(SVIEModel::new(vec![], vec![], vec![vec![1.0]], vec![]).is_err());
    assert!(SVIEModel::new(vec![Kernel::One], vec![vec![None]], vec![vec![1.0]], vec![0.0]).is_err());
    assert!(SVIEModel::linear_1d(Kernel::One, f64::NAN).is_err());
    // Degenerate (singular) correlation is accepted.
    assert!(SVIEModel::heston(Kernel::power(1.5).unwrap(), 1.0, 1.0, 1.0, UFunc::U, UFunc::Cos, UFunc::Cos, UFunc::U).is_ok());
}

#[test]
fn model_spec_json() {
    let json = r#"{"family":{"heston":{"b1":"u","sigma1":"cos","sigma2":"cos","b2":{"affine":{"a":0.5,"b":-0.3333333333333333}}}},
        "kernels":[{"kind":"one"},{"kind":"power","H":1.5}],"x0":[1.0,1.0],"corr":[[1,0.5],[0.5,1]]}"#;
    let spec: ModelSpec = serde_json::from_str(json).unwrap();
    let m = SVIEModel::from_spec(&spec).unwrap();
    assert_eq!(m.d(), 2);
    assert_eq!(m.d1(), 2);
    assert_eq!(m.corr()[0][1], 0.5);
    let lin: ModelSpec = serde_json::from_str(r#"{"family":"linear","kernels":[{"kind":"power","H":2.5}],"x0":[0.56]}"#).unwrap();
    assert_eq!(SVIEModel::from_spec(&lin).unwrap().x0(), &[0.56]);
    let rough = serde_json::from_str::<ModelSpec>(r#"{"family":"linear","kernels":[{"kind":"power","H":0.3}],"x0":[0]}"#);
    assert!(rough.is_err());
    let wrong_s: ModelSpec = serde_json::from_str(
        r#"{"family":{"heston":{"b1":"u","sigma1":"cos","sigma2":"cos","b2":"u"}},"kernels":[{"kind":"power","H":1.5},{"kind":"one"}],"x0":[1,1]}"#,
    )
    .unwrap();
    assert!(matches!(SVIEModel::from_spec(&wrong_s), Err(Error::Model(_))));
}

#[test]
fn hypothesis_report() {
    let m = SVIEModel::linear_1d(Kernel::power(1.5).unwrap(), 0.0).unwrap();
    let r3 = validate_hypotheses(&m, 3);
    assert!(!r3.all_satisfied(), "H = 3/2 sits on the order-3 boundary");
    assert!(r3.checks[0].standing);
    assert!(validate_hypotheses(&SVIEModel::linear_1d(Kernel::power(2.5).unwrap(), 0.0).unwrap(), 3).all_satisfied());
    assert!(validate_hypotheses(&SVIEModel::linear_1d(Kernel::One, 0.0).unwrap(), 5).all_satisfied());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// For `V ≡ 1` the map from path to terminal value is linear.
    #[test]
    fn linear_model_is_linear_in_the_path(a in proptest::collection::vec(-3.0f64..3.0, 3), b in proptest::collection::vec(-3.0f64..3.0, 3), h in 0.6f64..3.0, c in -2.0f64..2.0) {
        let model = SVIEModel::linear_1d(Kernel::power(h).unwrap(), 0.0).unwrap();
        let grid = SolveGrid::new(30, 1.0).unwrap();
        let x = |s: &[f64]| solve_along_path(&model, &path1(1.0, s), &grid, false).unwrap().terminal[0];
        let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + c * q).collect();
        prop_assert!((x(&combo) - x(&a) - c * x(&b)).abs() < 1e-12);
    }

    /// Mirroring the path of an odd-symmetric model mirrors the solution.
    #[test]
    fn mirrored_path_mirrors_linear_solution(a in proptest::collection::vec(-3.0f64..3.0, 4), h in 0.6f64..3.0) {
        let model = SVIEModel::linear_1d(Kernel::power(h).unwrap(), 0.0).unwrap();
        let grid = SolveGrid::new(20, 0.5).unwrap();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let p = solve_along_path(&model, &path1(0.5, &a), &grid, false).unwrap().terminal[0];
        let m = solve_along_path(&model, &path1(0.5, &neg), &grid, false).unwrap().terminal[0];
        prop_assert!((p + m).abs() < 1e-13);
    }
}
