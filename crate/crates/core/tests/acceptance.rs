//! Acceptance criteria, one test per criterion. Each prints a
//! `[PASS]`/`[FAIL] criterion N` line with the numbers it judged.

use std::f64::consts::PI;

use svie_cubature::cubature::{
    build_1d_multi_n3, build_1d_multi_n5, build_1d_oneperiod_n3, build_2d_multi_n3, max_relative,
    printed_1d_n5_oneperiod, solve_moment_system, verify, SolverConfig, PRINTED_2D_N5_WEIGHTS,
};
use svie_cubature::moments::{
    beta_integral, combined_expectation, moment_targets_1d_n3_oneperiod, moment_targets_1d_n5_multi,
    moment_targets_1d_n5_oneperiod, moment_targets_2d_n3_multi, wiener_expectation, IteratedIntegralSpec,
    KernelFactor, QUARTIC_ANCHOR_GROUPS,
};
use svie_cubature::pricing::{compare, cubature_price, gaussian_oracle, EulerConfig, TruthSource};
use svie_cubature::repro::{multi_n3, run_table, solve_2d_n5, Check, ReproOptions, ReproReport};
use svie_cubature::volterra::SolveGrid;
use svie_cubature::{Error, Kernel, Payoff, SVIEModel};

fn verdict(n: usize, what: &str, ok: bool) {
    println!("[{}] criterion {n}: {what}", if ok { "PASS" } else { "FAIL" });
}

/// Relative agreement, or absolute agreement at the same level for zero
/// expected values.
fn close(value: f64, expected: f64, rel: f64) -> bool {
    if expected == 0.0 {
        value.abs() <= rel
    } else {
        ((value - expected) / expected).abs() <= rel
    }
}

fn report_checks(n: usize, rep: &ReproReport) -> bool {
    println!("{}", rep.render());
    let failed: Vec<&Check> = rep.checks.iter().filter(|c| !c.passed()).collect();
    for c in &failed {
        println!("  miss: {} = {:.7}, expected {:.7} ± {:.1e}", c.label, c.value, c.expected, c.tolerance);
    }
    let ok = failed.is_empty();
    verdict(n, &format!("{}: {}/{} checks within tolerance", rep.table, rep.checks.len() - failed.len(), rep.checks.len()), ok);
    ok
}

// ---------------------------------------------------------------------------

fn factor(kernel: Kernel, anchor: usize, leg: usize) -> KernelFactor {
    KernelFactor { kernel, anchor, leg }
}

fn spec(word: Vec<usize>, factors: Vec<KernelFactor>, t: f64) -> IteratedIntegralSpec {
    let n = word.len();
    IteratedIntegralSpec::new(word, factors, vec![0; n], 0.0, t).unwrap()
}

#[test]
fn criterion_1_moment_identities() {
    let started = std::time::Instant::now();
    let mut misses = Vec::new();
    let mut count = 0;
    let mut check = |label: String, value: f64, expected: f64| {
        count += 1;
        if !close(value, expected, 1e-9) {
            misses.push(format!("{label}: {value:.12e} vs {expected:.12e}"));
        }
    };
    let one_d = vec![vec![1.0]];
    for (h, t) in [(1.5f64, 1.0f64), (1.5, 0.7), (2.5, 1.0), (2.5, 0.3)] {
        let k = Kernel::power(h).unwrap();
        let hp = h + 0.5;
        let e = |anchors: &[usize], word: Vec<usize>| {
            wiener_expectation(&IteratedIntegralSpec::kernel_chain(k, anchors, word, 0.0, t).unwrap(), &one_d)
                .unwrap()
                .value
        };
        check(format!("H={h} T={t} G''V²"), e(&[0, 0], vec![1, 1]), t.powf(2.0 * h) / (4.0 * h));
        check(format!("H={h} T={t} G'V'V"), e(&[0, 1], vec![1, 1]), 0.0);

        let t4 = t.powf(4.0 * h) / (4.0 * h);
        let quartic = [
            t.powf(4.0 * h) / (32.0 * h * h),
            t4 * beta_integral(2.0 * h, hp).unwrap(),
            t4 * beta_integral(2.0 * h, 2.0 * hp).unwrap(),
            t4 * beta_integral(2.0 * h, 2.0 * hp).unwrap(),
            0.0,
            0.0,
            0.0,
        ];
        for (g, (anchors, expected)) in QUARTIC_ANCHOR_GROUPS.iter().zip(quartic).enumerate() {
            let terms: Vec<(f64, IteratedIntegralSpec)> = anchors
                .iter()
                .map(|a| (1.0, IteratedIntegralSpec::kernel_chain(k, a, vec![1, 1, 1, 1], 0.0, t).unwrap()))
                .collect();
            let v = combined_expectation(&terms, &one_d).unwrap().value;
            check(format!("H={h} T={t} quartic group {}", g + 1), v, expected);
        }
    }

    // Two drivers: K₁ ≡ 1, K₂ = power kernel, correlation ρ.
    for (h, t, rho) in [(1.5, 1.0f64, 0.5), (1.5, 0.1, 0.5), (2.5, 0.8, -0.3)] {
        let kern = |i: usize| if i == 1 { Kernel::One } else { Kernel::power(h).unwrap() };
        let corr = vec![vec![1.0, rho], vec![rho, 1.0]];
        let hp = h + 0.5;
        let g1 = t.powf(hp + 1.0) / (hp * (hp + 1.0));
        let g2 = t.powf(2.0 * hp) / (8.0 * h * hp);
        let e = |s: IteratedIntegralSpec| wiener_expectation(&s, &corr).unwrap().value;
        let tag = format!("H={h} T={t} ρ={rho}");

        for (i, j, kk, expected) in [
            (1, 1, 1, t * t / 4.0),
            (1, 2, 1, rho * g1 / 2.0),
            (2, 1, 1, rho * g1 / 2.0),
            (2, 2, 1, g2),
            (1, 2, 2, 0.0),
            (2, 2, 2, 0.0),
        ] {
            let s = spec(vec![0, i, j], vec![factor(kern(i), 1, 2), factor(kern(j), kk, 3)], t);
            check(format!("{tag} 2dE2 ({i},{j},{kk})"), e(s), expected);
        }

        for i1 in 1..=2 {
            for i2 in 1..=2 {
                for k2 in 1..=2 {
                    // σ,0: ∫ K_{i2}(t_1, t_3) ∘dB^{i2}_{t_3} dt_2 ∘dB^1_{t_1}
                    let s0 = spec(vec![1, 0, i2], vec![factor(kern(i2), 1, 3)], t);
                    check(format!("{tag} 2dE3 σ,0 ({i2})"), e(s0), 0.0);
                    // σ,1: K_{i1}(t_1, t_2) dt_2 and K_{i2}(t_{κ2}, t_3) ∘dB^{i2}_{t_3}
                    let s1 = spec(vec![1, 0, i2], vec![factor(kern(i1), 1, 2), factor(kern(i2), k2, 3)], t);
                    check(format!("{tag} 2dE3 σ,1 ({i1},{i2},{k2})"), e(s1), 0.0);
                    // σ,2: ∘dB^{i1}_{t_2} with a dt_3 leg
                    let s2 = spec(vec![1, i1, 0], vec![factor(kern(i1), 1, 2), factor(kern(i2), k2, 3)], t);
                    let expected = match (i1, i2) {
                        (1, 1) => t * t / 4.0,
                        (1, 2) => g1 / 2.0,
                        _ => 0.0,
                    };
                    check(format!("{tag} 2dE3 σ,2 ({i1},{i2},{k2})"), e(s2), expected);
                    for i3 in 1..=2 {
                        for k3 in 1..=3 {
                            let s3 = spec(
                                vec![1, i1, i2, i3],
                                vec![factor(kern(i1), 1, 2), factor(kern(i2), k2, 3), factor(kern(i3), k3, 4)],
                                t,
                            );
                            let expected = if i1 == 2 || (i3 == 2 && k3 == 3) {
                                0.0
                            } else {
                                match (i2, i3) {
                                    (1, 1) => t * t / 8.0,
                                    (2, 1) | (1, 2) => rho * g1 / 4.0,
                                    _ => g2 / 2.0,
                                }
                            };
                            check(format!("{tag} 2dE3 σ,3 ({i1},{i2},{i3}; κ=({k2},{k3}))"), e(s3), expected);
                        }
                    }
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    for m in &misses {
        println!("  miss: {m}");
    }
    let ok = misses.is_empty() && secs < 10.0;
    verdict(1, &format!("{count} moment identities at 1e-9 relative, {} misses, {secs:.2}s", misses.len()), ok);
    assert!(ok);
}

#[test]
fn criterion_2_example_exactness() {
    let (h, t) = (1.5, 1.0);
    let hp = h + 0.5;
    let hm = h - 0.5;
    let model = SVIEModel::linear_1d(Kernel::power(h).unwrap(), 0.0).unwrap();
    let grid = SolveGrid::new(1000, t).unwrap();
    let g = Payoff::square();
    let one = cubature_price(&model, &g, &build_1d_oneperiod_n3(h, t).unwrap(), &grid).unwrap().value;
    let multi = cubature_price(&model, &g, &build_1d_multi_n3(t).unwrap(), &grid).unwrap().value;
    let e_one = t.powf(2.0 * h) / (2.0 * h);
    let e_multi = t.powf(2.0 * h) / (hp * hp);
    let gap = hm * hm / (2.0 * h * hp * hp) * t.powf(2.0 * h);
    let ok = (one - e_one).abs() <= 1e-6 && (multi - e_multi).abs() <= 1e-6 && ((one - multi) - gap).abs() <= 1e-6;
    verdict(
        2,
        &format!("one-period {one:.9} (exact {e_one:.9}), multi {multi:.9} (exact {e_multi:.9}), gap {:.9} (analytic {gap:.9})", one - multi),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_3_table1() {
    let rep = run_table("table1", &ReproOptions::default()).unwrap();
    assert!(report_checks(3, &rep));
}

#[test]
fn criterion_4_table2() {
    let started = std::time::Instant::now();
    let rep = run_table("table2", &ReproOptions::default()).unwrap();
    let ok = report_checks(4, &rep) && started.elapsed().as_secs_f64() < 30.0;
    assert!(ok, "table 2 reproduction");
}

#[test]
fn criterion_5_convergence_order() {
    let (h, t) = (1.5, 1.0);
    let model = SVIEModel::cos_1d(Kernel::power(h).unwrap(), 1.0).unwrap();
    let grid = SolveGrid::new(600, t).unwrap();
    let g = Payoff::cos();
    let y = |m: usize| cubature_price(&model, &g, &multi_n3(t, m).unwrap(), &grid).unwrap().value;
    // Error ~ c/M: eliminate the leading term from M = 7 and M = 8.
    let (y7, y8) = (y(7), y(8));
    let reference = 8.0 * y8 - 7.0 * y7;
    let pts: Vec<(f64, f64)> = (2..=6).map(|m| ((m as f64).ln(), (y(m) - reference).abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    for (m, p) in (2..=6).zip(&pts) {
        println!("  M={m}: |Y - ref| = {:.3e}", p.1.exp());
    }
    let ok = slope <= -0.8;
    verdict(5, &format!("reference {reference:.8} (Y8 {y8:.8}, Y7 {y7:.8}), log-log slope {slope:.3} (needs ≤ -0.8)"), ok);
    assert!(ok);
}

#[test]
fn criterion_6_closed_form_residuals() {
    let r1 = max_relative(&verify(&build_1d_multi_n5(1.0, None).unwrap(), &moment_targets_1d_n5_multi(1.0).unwrap()).unwrap());
    let r2 = max_relative(
        &verify(&build_1d_oneperiod_n3(1.5, 1.0).unwrap(), &moment_targets_1d_n3_oneperiod(1.5, 1.0).unwrap()).unwrap(),
    );
    let r3 = max_relative(
        &verify(&build_2d_multi_n3(1.0, 0.5, Some(PI / 6.0)).unwrap(), &moment_targets_2d_n3_multi(1.0, 0.5).unwrap()).unwrap(),
    );
    let ok = r1 <= 1e-12 && r2 <= 1e-9 && r3 <= 1e-12;
    verdict(6, &format!("1-D order-5 multi {r1:.1e} (≤1e-12), 1-D order-3 one-period {r2:.1e} (≤1e-9), 2-D order-3 multi {r3:.1e} (≤1e-12)"), ok);
    assert!(ok);
}

#[test]
fn criterion_7_solver_recovery() {
    let sys = moment_targets_1d_n5_oneperiod(1.5, 1.0).unwrap();
    let cfg = SolverConfig {
        restarts: 64,
        threshold: 1e-6,
        ..SolverConfig::default()
    };
    let one_d = match solve_moment_system(&sys, &cfg) {
        Ok(o) => o.max_relative,
        Err(Error::Solver { best, .. }) => best.max_relative,
        Err(e) => panic!("{e}"),
    };
    let ok_a = one_d <= 1e-6;
    verdict(7, &format!("(a) 1-D order-5 one-period solve: max relative residual {one_d:.3e} (needs ≤ 1e-6)"), ok_a);

    let printed = printed_1d_n5_oneperiod(1.0).unwrap();
    let wsum: f64 = printed.periods[0].weights.iter().sum();
    let res = verify(&printed, &sys).unwrap();
    for r in &res {
        println!("  printed paths: {} lhs {:.6e} target {:.6e} relative {:.3e}", r.label, r.lhs, r.target, r.relative);
    }
    let worst = max_relative(&res);
    let ok_b = wsum == 0.5 && worst <= 1e-2;
    verdict(7, &format!("(b) printed 1-D order-5 measure: weight sum {wsum}, worst relative residual {worst:.3e} (needs ≤ 1e-2)"), ok_b);

    let two_d = solve_2d_n5(0.1, ReproOptions::default().seed).map(|o| o.max_relative);
    let two_d = match two_d {
        Ok(r) => r,
        Err(Error::Solver { best, .. }) => best.max_relative,
        Err(e) => panic!("{e}"),
    };
    let ok_c = two_d <= 1e-3;
    verdict(7, &format!("(c) 2-D order-5 one-period solve: max relative residual {two_d:.3e} (needs ≤ 1e-3)"), ok_c);

    let psum: f64 = PRINTED_2D_N5_WEIGHTS.iter().sum();
    let ok_d = (psum - 0.5).abs() <= 1e-6;
    verdict(7, &format!("(d) printed 2-D order-5 weights sum to {psum:.9}"), ok_d);
    assert!(ok_a && ok_b && ok_c && ok_d);
}

#[test]
fn criterion_8_statistical_pipeline() {
    let (h, t, x0) = (1.5, 0.2, 1.0);
    let kernel = Kernel::power(h).unwrap();
    let model = SVIEModel::linear_1d(kernel, x0).unwrap();
    let g = Payoff::cos();
    let truth = gaussian_oracle(&g, x0, kernel, t).unwrap().value;
    let q = printed_1d_n5_oneperiod(t).unwrap();
    let grid = SolveGrid::new(12, t).unwrap();
    let c = compare(&model, &g, &q, &grid, &EulerConfig::new(100, 8), 1000, TruthSource::Value(truth)).unwrap();
    let gap = (c.percentile - c.rank_percentile).abs();
    let ok_a = gap <= 0.05;
    verdict(
        8,
        &format!("normal percentile {:.1}% vs rank percentile {:.1}% over 1000 Euler errors (gap {:.1} pp)", 100.0 * c.percentile, 100.0 * c.rank_percentile, 100.0 * gap),
        ok_a,
    );
    let rep = run_table("table3", &ReproOptions::default()).unwrap();
    let ok_b = report_checks(8, &rep);
    assert!(ok_a && ok_b);
}

#[test]
fn criterion_9_tables_5_to_8() {
    let mut ok = true;
    for table in ["table5", "table6", "table7", "table8"] {
        let rep = run_table(table, &ReproOptions::default()).unwrap();
        ok &= report_checks(9, &rep);
    }
    assert!(ok, "tables 5-8 bands");
}
