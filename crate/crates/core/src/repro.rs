//! Regeneration of the published result tables at their stated parameters,
//! with a tolerance check per reproduced number.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cubature::{
    build_1d_multi_n3, build_1d_multi_n5, build_1d_oneperiod_n3, build_2d_multi_n3, printed_1d_n5_oneperiod,
    solve_moment_system, CubatureMeasure, SolveOutcome, SolverConfig,
};
use crate::error::{domain, Result};
use crate::kernel::Kernel;
use crate::model::{SVIEModel, UFunc};
use crate::moments::moment_targets_2d_n5_oneperiod;
use crate::payoff::Payoff;
use crate::pricing::{compare, cubature_price, gaussian_oracle, ComparisonReport, EulerConfig, TruthSource};
use crate::volterra::SolveGrid;

/// One reproduced number against its printed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(label: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            label: label.into(),
            value,
            expected,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub table: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ReproReport {
    fn new(table: &str, title: &str, header: &[&str]) -> Self {
        ReproReport {
            table: table.into(),
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// Aligned text table followed by the check list.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (c, cell) in r.iter().enumerate().take(cols) {
                width[c] = width[c].max(cell.chars().count());
            }
        }
        let line = |r: &Vec<String>| {
            let mut s = String::new();
            for (c, cell) in r.iter().enumerate().take(cols) {
                let pad = width[c] - cell.chars().count();
                s.push_str(cell);
                s.push_str(&" ".repeat(pad + 2));
            }
            s.trim_end().to_string()
        };
        let mut out = format!("{} — {}\n", self.table, self.title);
        out.push_str(&line(&self.header));
        out.push('\n');
        out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * cols));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        if !self.checks.is_empty() {
            out.push('\n');
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "[{}] {}: {:.7} vs {:.7} (tol {:.1e})",
                    if c.passed() { "ok" } else { "MISS" },
                    c.label,
                    c.value,
                    c.expected,
                    c.tolerance
                );
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    /// CSV of the checks: table, label, value, expected, tolerance, pass.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["table", "label", "value", "expected", "tolerance", "pass"])?;
        for c in &self.checks {
            w.write_record([
                self.table.clone(),
                c.label.clone(),
                format!("{:.10}", c.value),
                format!("{}", c.expected),
                format!("{:e}", c.tolerance),
                c.passed().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproOptions {
    pub seed: u64,
    /// Euler repeats per comparison; `None` keeps the published count.
    pub repeats: Option<usize>,
    /// Euler paths per repeat; `None` keeps the published count.
    pub samples: Option<usize>,
    /// Skip every Euler column (cubature and oracle only).
    pub skip_euler: bool,
}

impl Default for ReproOptions {
    fn default() -> Self {
        ReproOptions {
            seed: 20_240_101,
            repeats: None,
            samples: None,
            skip_euler: false,
        }
    }
}

pub const TABLES: [&str; 7] = ["table1", "table2", "table3", "table5", "table6", "table7", "table8"];

pub fn run_table(name: &str, opts: &ReproOptions) -> Result<ReproReport> {
    match name {
        "table1" => table1(),
        "table2" => table2(),
        "table3" => table3(opts),
        "table5" => table5(opts),
        "table6" => table6(opts),
        "table7" => table7(opts),
        "table8" => table8(opts),
        _ => domain(format!("unknown table '{name}' (expected one of {})", TABLES.join(", "))),
    }
}

fn f(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

/// Half a unit in the last printed place of a value shown with `digits`
/// decimals.
fn half_ulp(digits: i32) -> f64 {
    0.5 * 10f64.powi(-digits)
}

// ---------------------------------------------------------------------------
// Linear model: X_t = x0 + ∫ (t−r)^{H−1/2} dB_r

/// Multi-period measures of order 3 composed `m` times over `[0, T]`.
pub fn multi_n3(t: f64, m: usize) -> Result<CubatureMeasure> {
    let p = build_1d_multi_n3(t / m as f64)?;
    CubatureMeasure::repeated(p.periods[0].clone(), t, m)
}

/// Multi-period three-path order-5 measures composed `m` times.
pub fn multi_n5(t: f64, m: usize) -> Result<CubatureMeasure> {
    let p = build_1d_multi_n5(t / m as f64, None)?;
    CubatureMeasure::repeated(p.periods[0].clone(), t, m)
}

pub fn table1() -> Result<ReproReport> {
    let (h, t, x0, d) = (2.5, 3.0, 0.56, 300);
    let kernel = Kernel::power(h)?;
    let model = SVIEModel::linear_1d(kernel, x0)?;
    let g = Payoff::call(0.5);
    let grid = SolveGrid::new(d, t)?;
    let truth = gaussian_oracle(&g, x0, kernel, t)?.value;
    let cub = cubature_price(&model, &g, &build_1d_oneperiod_n3(h, t)?, &grid)?.value;
    let printed_mul = [2.6281, 3.2450, 3.1967, 3.0340, 2.8883];
    let mut mul = Vec::new();
    for m in 1..=5 {
        mul.push(cubature_price(&model, &g, &multi_n3(t, m)?, &grid)?.value);
    }
    let mut rep = ReproReport::new(
        "table1",
        "linear model, H=5/2, T=3, G=(x-1/2)^+, x0=0.56, D=300",
        &["Y_true", "Y_cub", "Y_mul1", "Y_mul2", "Y_mul3", "Y_mul4", "Y_mul5"],
    );
    let mut row = vec![f(truth, 4), f(cub, 4)];
    row.extend(mul.iter().map(|v| f(*v, 4)));
    rep.rows.push(row);
    rep.checks.push(Check::new("Y_true", truth, 2.8112, 5e-4));
    rep.checks.push(Check::new("Y_cub", cub, 3.5157, 1e-3));
    for (m, (v, p)) in mul.iter().zip(printed_mul).enumerate() {
        rep.checks.push(Check::new(format!("Y_mul{}", m + 1), *v, p, 2e-3));
    }
    Ok(rep)
}

pub fn table2() -> Result<ReproReport> {
    let (h, t, d, m) = (1.5, 0.3, 30, 2);
    let kernel = Kernel::power(h)?;
    let grid = SolveGrid::new(d, t)?;
    let cases = [
        ("cos / 1", Payoff::cos(), 1.0, [0.5378641, 0.5380251, 0.5380277]),
        ("x^2 / 1", Payoff::square(), 1.0, [1.0090376, 1.0084375, 1.0084375]),
        ("(x-1/2)^+ / 0.56", Payoff::call(0.5), 0.56, [0.0751964, 0.0740474, 0.0751558]),
    ];
    let mut rep = ReproReport::new(
        "table2",
        "linear model, H=3/2, T=0.3, D=30, M=2",
        &["G / x0", "Y_true", "Y_mul2 (N=3)", "Y_mul2 (N=5)"],
    );
    let q3 = multi_n3(t, m)?;
    let q5 = multi_n5(t, m)?;
    for (label, g, x0, printed) in cases {
        let model = SVIEModel::linear_1d(kernel, x0)?;
        let truth = gaussian_oracle(&g, x0, kernel, t)?.value;
        let y3 = cubature_price(&model, &g, &q3, &grid)?.value;
        let y5 = cubature_price(&model, &g, &q5, &grid)?.value;
        rep.rows.push(vec![label.into(), f(truth, 7), f(y3, 7), f(y5, 7)]);
        rep.checks.push(Check::new(format!("{label} Y_true"), truth, printed[0], 1e-6));
        rep.checks.push(Check::new(format!("{label} Y_mul2 N=3"), y3, printed[1], 5e-5));
        rep.checks.push(Check::new(format!("{label} Y_mul2 N=5"), y5, printed[2], 5e-5));
    }
    Ok(rep)
}

fn euler_cfg(opts: &ReproOptions, samples: usize, salt: u64) -> EulerConfig {
    EulerConfig::new(opts.samples.unwrap_or(samples), opts.seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9)))
}

fn push_comparison(rep: &mut ReproReport, label: &str, c: &ComparisonReport) {
    rep.rows.push(vec![
        label.into(),
        f(c.truth, 5),
        f(c.cubature, 5),
        f(c.e_cub, 5),
        f(c.e_mean, 5),
        f(c.sd, 5),
        format!("{:.1}%", 100.0 * c.percentile),
        format!("{:.1}%", 100.0 * c.rank_percentile),
    ]);
}

const CMP_HEADER: [&str; 8] = ["case", "Y_true", "Y_cub", "e_cub", "e_mean", "SD", "pct", "rank pct"];

pub fn table3(opts: &ReproOptions) -> Result<ReproReport> {
    let (h, t, x0) = (1.5, 0.2, 1.0);
    let kernel = Kernel::power(h)?;
    let model = SVIEModel::linear_1d(kernel, x0)?;
    let g = Payoff::cos();
    let q = printed_1d_n5_oneperiod(t)?;
    let truth = gaussian_oracle(&g, x0, kernel, t)?.value;
    let mut rep = ReproReport::new(
        "table3",
        "linear model, H=3/2, T=0.2, G=cos, x0=1, one period N=5 (printed paths)",
        &CMP_HEADER,
    );
    rep.notes.push(format!(
        "Y_true: exact Gaussian value {truth:.7} vs printed 0.53959 (difference {:.1e}; the printed truth carries Monte-Carlo noise)",
        (truth - 0.53959f64).abs()
    ));
    for (i, d) in [12usize, 60, 120].into_iter().enumerate() {
        let grid = SolveGrid::new(d, t)?;
        let cub = cubature_price(&model, &g, &q, &grid)?.value;
        rep.checks.push(Check::new(format!("e_cub D={d}"), (cub - truth).abs(), 0.00046, 2e-5));
        if i == 0 {
            rep.checks.push(Check::new("Y_cub D=12", cub, 0.54005, 2e-3));
        }
    }
    if !opts.skip_euler {
        let grid = SolveGrid::new(12, t)?;
        let repeats = opts.repeats.unwrap_or(1000);
        for (i, (ms, pct)) in [(100usize, 0.194), (500, 0.24), (1000, 0.275)].into_iter().enumerate() {
            let cfg = euler_cfg(opts, ms, 3 * 16 + i as u64);
            let c = compare(&model, &g, &q, &grid, &cfg, repeats, TruthSource::Value(truth))?;
            push_comparison(&mut rep, &format!("M_euler={}", cfg.samples), &c);
            rep.notes.push(format!(
                "M_euler={}: percentile {:.1}% (published {:.1}%), below 30%: {}",
                cfg.samples,
                100.0 * c.percentile,
                100.0 * pct,
                c.percentile < 0.30
            ));
            rep.checks.push(Check::new(
                format!("percentile below 30% M_euler={}", cfg.samples),
                c.percentile,
                0.0,
                0.30,
            ));
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Heston-type model

pub fn rvm_model(kernel: Kernel, s0: f64, funcs: (UFunc, UFunc, UFunc)) -> Result<SVIEModel> {
    SVIEModel::heston(
        kernel,
        0.5,
        s0,
        1.0,
        funcs.0,
        funcs.1,
        funcs.2,
        UFunc::Affine { a: 0.5, b: -1.0 / 3.0 },
    )
}

/// Order-5 one-period measure for the two-driver model (`H = 3/2`,
/// `ρ = 1/2`, homogeneous coefficients), solved numerically.
pub fn solve_2d_n5(t: f64, seed: u64) -> Result<SolveOutcome> {
    let sys = moment_targets_2d_n5_oneperiod(1.5, t, 0.5, true)?;
    let cfg = SolverConfig {
        seed,
        threshold: 1e-3,
        ..SolverConfig::default()
    };
    solve_moment_system(&sys, &cfg)
}

/// Fine grid used to separate the measure's error from the coarse-grid
/// discretisation of the path equation.
const FINE_STEPS: usize = 1200;

/// Printed Euler statistics for one column: (truth, cub, e_mean, SD).
type Printed = (f64, f64, f64, f64);

/// Decimals shown for each printed column value.
type Digits = (i32, i32, i32, i32);

#[allow(clippy::too_many_arguments)]
fn heston_like_column(
    rep: &mut ReproReport,
    label: &str,
    model: &SVIEModel,
    g: &Payoff,
    q: &CubatureMeasure,
    grid: &SolveGrid,
    printed: Printed,
    digits: Digits,
    opts: &ReproOptions,
    repeats: usize,
    salt: u64,
) -> Result<()> {
    let cub = cubature_price(model, g, q, grid)?.value;
    rep.checks.push(Check::new(format!("{label} Y_cub"), cub, printed.1, 2e-3));
    let fine = cubature_price(model, g, q, &SolveGrid::new(FINE_STEPS, grid.horizon)?)?.value;
    rep.notes.push(format!(
        "{label}: same measure on a D = {FINE_STEPS} grid gives {fine:.5} (path-discretisation gap {:.1e})",
        (fine - cub).abs()
    ));
    if opts.skip_euler {
        rep.rows.push(vec![label.into(), "-".into(), f(cub, 5)]);
        return Ok(());
    }
    let cfg = euler_cfg(opts, 500, salt);
    let reps = opts.repeats.unwrap_or(repeats);
    let c = compare(model, g, q, grid, &cfg, reps, TruthSource::PooledEuler)?;
    push_comparison(rep, label, &c);
    let se = c.truth_se.unwrap_or(0.0);
    rep.checks.push(Check::new(
        format!("{label} Y_true"),
        c.truth,
        printed.0,
        3.0 * se + half_ulp(digits.0),
    ));
    let se_e = c.sd / (c.euler_errors.len() as f64).sqrt();
    rep.checks.push(Check::new(
        format!("{label} e_mean"),
        c.e_mean,
        printed.2,
        3.0 * se_e + half_ulp(digits.2),
    ));
    rep.notes.push(format!(
        "{label}: SD {:.5} (published {:.*}), percentile {:.1}%",
        c.sd,
        digits.3 as usize,
        printed.3,
        100.0 * c.percentile
    ));
    Ok(())
}

fn rvm_table(table: &str, title: &str, funcs: (UFunc, UFunc, UFunc), printed: [Printed; 3], digits: [Digits; 3], opts: &ReproOptions, salt: u64) -> Result<ReproReport> {
    let t = 0.1;
    let kernel = Kernel::power(1.5)?;
    let grid = SolveGrid::new(12, t)?;
    let sol = solve_2d_n5(t, opts.seed)?;
    let q = sol.measure.clone();
    let mut rep = ReproReport::new(table, title, &CMP_HEADER);
    rep.notes.push(format!(
        "solved 2-D order-5 measure: max relative residual {:.2e}, weights {:?}",
        sol.max_relative, q.periods[0].weights
    ));
    let cases = [
        ("cos / 1", Payoff::cos(), 1.0),
        ("x^2 / 1", Payoff::square(), 1.0),
        ("(x-1/2)^+ / 0.56", Payoff::call(0.5), 0.56),
    ];
    for (k, (label, g, s0)) in cases.into_iter().enumerate() {
        let model = rvm_model(kernel, s0, funcs)?;
        heston_like_column(&mut rep, label, &model, &g, &q, &grid, printed[k], digits[k], opts, 1000, salt + k as u64)?;
    }
    Ok(rep)
}

pub fn table5(opts: &ReproOptions) -> Result<ReproReport> {
    rvm_table(
        "table5",
        "fractional SV model, H=3/2, rho=1/2, T=0.1, b1=U, s1=s2=cos U, D=12, one period N=5",
        (UFunc::U, UFunc::Cos, UFunc::Cos),
        [
            (0.4270, 0.4257, 0.0063, 0.0047),
            (1.2947, 1.2967, 0.0157, 0.0119),
            (0.1320, 0.1283, 0.0037, 0.0028),
        ],
        [(4, 4, 4, 4), (4, 4, 4, 4), (4, 4, 4, 4)],
        opts,
        500,
    )
}

pub fn table6(opts: &ReproOptions) -> Result<ReproReport> {
    rvm_table(
        "table6",
        "fractional SV model, H=3/2, rho=1/2, T=0.1, b1=s1=s2=sqrt U, D=12, one period N=5",
        (UFunc::Sqrt, UFunc::Sqrt, UFunc::Sqrt),
        [
            (0.37897, 0.3698, 0.0119, 0.0092),
            (1.4932, 1.4887, 0.0361, 0.0270),
            (0.17098, 0.17797, 0.007, 0.0052),
        ],
        [(5, 4, 4, 4), (4, 4, 4, 3), (5, 5, 3, 4)],
        opts,
        600,
    )
}

/// One-dimensional nonlinear model `V(x) = cos x`: regularity, horizon and
/// multi-period sub-tables.
pub fn table7(opts: &ReproOptions) -> Result<ReproReport> {
    let kernel = Kernel::power(1.5)?;
    let mut rep = ReproReport::new("table7", "nonlinear model V=cos x, H=3/2", &CMP_HEADER);
    let cases = [
        ("cos / 1", Payoff::cos(), 1.0),
        ("x^2 / 1", Payoff::square(), 1.0),
        ("(x-1/2)^+ / 0.56", Payoff::call(0.5), 0.56),
    ];
    // Regularity of G: T = 0.2, D = 12, one period N = 5.
    let greg: [Printed; 3] = [
        (0.5401, 0.5402, 0.0008, 0.00064),
        (1.00073, 1.00041, 0.00200, 0.00149),
        (0.0617, 0.0601, 0.00147, 0.0011),
    ];
    let greg_digits: [Digits; 3] = [(4, 4, 4, 5), (5, 5, 5, 5), (4, 4, 5, 4)];
    let t = 0.2;
    let q = printed_1d_n5_oneperiod(t)?;
    let grid = SolveGrid::new(12, t)?;
    for (k, (label, g, x0)) in cases.iter().enumerate() {
        let model = SVIEModel::cos_1d(kernel, *x0)?;
        heston_like_column(
            &mut rep,
            &format!("T=0.2 {label}"),
            &model,
            g,
            &q,
            &grid,
            greg[k],
            greg_digits[k],
            opts,
            1000,
            700 + k as u64,
        )?;
    }
    // Horizon: G = x², x0 = 1, T ∈ {0.5, 0.8} (T = 0.2 is the column above).
    let horizon: [(f64, usize, Printed, Digits); 2] = [
        (0.5, 30, (1.0109, 1.0056, 0.0332, 0.0098), (4, 4, 4, 4)),
        (0.8, 48, (1.045, 1.022, 0.0152, 0.0115), (3, 3, 4, 4)),
    ];
    for (k, (t, d, printed, digits)) in horizon.into_iter().enumerate() {
        let q = printed_1d_n5_oneperiod(t)?;
        let grid = SolveGrid::new(d, t)?;
        let model = SVIEModel::cos_1d(kernel, 1.0)?;
        heston_like_column(
            &mut rep,
            &format!("T={t} x^2 / 1"),
            &model,
            &Payoff::square(),
            &q,
            &grid,
            printed,
            digits,
            opts,
            1000,
            710 + k as u64,
        )?;
    }
    // Large horizon: T = 1, D = 100, multi-period M = 5, N = 3.
    let tbig: [Printed; 3] = [
        (0.5136, 0.5186, 0.0074, 0.0056),
        (1.098, 1.084, 0.023, 0.017),
        (0.2275, 0.2297, 0.011, 0.0089),
    ];
    let tbig_digits: [Digits; 3] = [(4, 4, 4, 4), (3, 3, 3, 3), (4, 4, 3, 4)];
    let q = multi_n3(1.0, 5)?;
    let grid = SolveGrid::new(100, 1.0)?;
    for (k, (label, g, x0)) in cases.iter().enumerate() {
        let model = SVIEModel::cos_1d(kernel, *x0)?;
        heston_like_column(
            &mut rep,
            &format!("T=1 M=5 {label}"),
            &model,
            g,
            &q,
            &grid,
            tbig[k],
            tbig_digits[k],
            opts,
            1000,
            720 + k as u64,
        )?;
    }
    Ok(rep)
}

pub fn table8(opts: &ReproOptions) -> Result<ReproReport> {
    let (t, m, d, s0) = (1.0, 3, 100, 0.56);
    let g = Payoff::call(0.5);
    let grid = SolveGrid::new(d, t)?;
    let q = {
        let p = build_2d_multi_n3(t / m as f64, 0.5, Some(std::f64::consts::PI / 6.0))?;
        CubatureMeasure::repeated(p.periods[0].clone(), t, m)?
    };
    let mut rep = ReproReport::new(
        "table8",
        "fractional SV model, T=1, b1=U, s1=s2=cos U, G=(x-1/2)^+, S0=0.56, M=3, N=3, D=100",
        &CMP_HEADER,
    );
    let printed: [(f64, Printed, Digits); 3] = [
        (1.0, (1.36, 1.299, 0.033, 0.024), (2, 3, 3, 3)),
        (1.5, (1.33, 1.302, 0.036, 0.028), (2, 3, 3, 3)),
        (2.5, (1.2957, 1.286, 0.037, 0.0260), (4, 3, 3, 4)),
    ];
    for (k, (h, p, digits)) in printed.into_iter().enumerate() {
        let model = rvm_model(Kernel::power(h)?, s0, (UFunc::U, UFunc::Cos, UFunc::Cos))?;
        heston_like_column(&mut rep, &format!("H={h}"), &model, &g, &q, &grid, p, digits, opts, 100, 800 + k as u64)?;
    }
    if let Some(w) = grid.alignment_warning(m) {
        rep.notes.push(w);
    }
    Ok(rep)
}
