//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation failure, 3 solver/construction
//! failure, 4 a reproduced table missed its tolerance.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cubature::{
    build_1d_multi_n3, build_1d_multi_n5, build_1d_oneperiod_n3, build_2d_multi_n3, solve_moment_system, verify,
    write_residual_csv, CubatureMeasure, SolveOutcome, SolverConfig, SolverMethod,
};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::model::{validate_hypotheses, Family, ModelSpec, SVIEModel};
use crate::moments::{
    moment_targets_1d_n3_multi, moment_targets_1d_n3_oneperiod, moment_targets_1d_n5_multi,
    moment_targets_1d_n5_oneperiod, moment_targets_2d_n3_multi, moment_targets_2d_n5_oneperiod, MomentSystem,
};
use crate::payoff::Payoff;
use crate::pricing::{compare, cubature_price, euler_price, gaussian_oracle, EulerConfig, PriceResult, TruthSource};
use crate::repro::{run_table, ReproOptions, TABLES};
use crate::volterra::SolveGrid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "SVIE_CUBATURE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "svie-cubature", version, about = "Cubature pricing for stochastic Volterra equations")]
pub struct Cli {
    /// Worker threads (default: $SVIE_CUBATURE_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct, solve or verify cubature measures.
    Cubature {
        #[command(subcommand)]
        action: CubatureCmd,
    },
    /// One price estimate.
    Price(PriceArgs),
    /// Cubature error against repeated Euler runs.
    Compare(CompareArgs),
    /// Regenerate a published table (table1, table2, table3, table5, table6, table7, table8, all).
    Repro(ReproArgs),
    /// Moment systems.
    Moments {
        #[command(subcommand)]
        action: MomentsCmd,
    },
    /// Run a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Dim {
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    OneD,
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    TwoD,
}

/// Which moment system / construction.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SystemArgs {
    #[arg(long, value_enum, default_value = "1d")]
    pub model: Dim,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Multi-period (per-period) construction instead of one period.
    #[arg(long)]
    pub multi: bool,
    /// Period length δ (multi-period constructions).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Horizon T (one-period constructions).
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Keep the two time-dependence conditions of the 2-D order-5 system.
    #[arg(long)]
    pub inhomogeneous: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    /// Use steepest descent instead of Levenberg–Marquardt.
    #[arg(long)]
    pub gradient_descent: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iter: self.max_iter,
            threshold: self.threshold,
            method: if self.gradient_descent {
                SolverMethod::GradientDescent
            } else {
                SolverMethod::LevenbergMarquardt
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CubatureCmd {
    /// Build (closed form) or solve a measure and write it as JSON.
    Build {
        #[command(flatten)]
        system: SystemArgs,
        /// Free weight of the order-5 one-driver family (≤ 1/6).
        #[arg(long)]
        lambda1: Option<f64>,
        /// Angle θ₁ of the two-driver order-3 measure.
        #[arg(long)]
        theta1: Option<f64>,
        /// Solve the moment system numerically even when a closed form exists.
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-equation residuals of a stored measure against a moment system.
    Verify {
        #[arg(long)]
        measure: PathBuf,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MomentsCmd {
    /// Write a moment system (specs and targets) as JSON.
    Dump {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CubOneperiod,
    CubMulti,
    /// Alias: one period unless `--M` is given.
    Cub,
    Euler,
    Oracle,
}

/// Model, payoff and discretisation shared by `price` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct PricingArgs {
    /// Built-in family (`linear`, `cos`) or a JSON model file.
    #[arg(long, default_value = "linear")]
    pub model: String,
    /// Payoff: cos, square, call:<strike>.
    #[arg(long = "G", default_value = "cos")]
    pub g: String,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long = "H", default_value_t = 1.5)]
    pub h: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long = "D", default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Period count for multi-period cubature.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Stored measure (overrides the construction flags).
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Euler paths per estimate.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum, default_value = "cub")]
    pub method: Method,
    #[command(flatten)]
    pub common: PricingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: PricingArgs,
    #[arg(long, default_value_t = 1000)]
    pub repeats: usize,
    /// Use the Gaussian oracle as truth (linear model) instead of the pooled Euler mean.
    #[arg(long)]
    pub oracle_truth: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    pub table: String,
    #[arg(long, default_value_t = ReproOptions::default().seed)]
    pub seed: u64,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub skip_euler: bool,
    /// Write the check list as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// JSON run configuration for `run --config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Model file (relative paths resolve against the config's directory).
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub method: RunMethod,
    #[serde(default = "default_order", rename = "N")]
    pub n: usize,
    #[serde(default = "default_m", rename = "M")]
    pub m: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(default, rename = "L")]
    pub l: Option<usize>,
    #[serde(default, rename = "W")]
    pub w: Option<usize>,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_payoff")]
    pub payoff: String,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub table: Option<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_order() -> usize {
    3
}
fn default_m() -> usize {
    1
}
fn default_payoff() -> String {
    "cos".into()
}
fn default_samples() -> usize {
    500
}
fn default_repeats() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMethod {
    CubOneperiod,
    CubMulti,
    Euler,
    Oracle,
    Compare,
    Repro,
}

impl RunConfig {
    /// Segments per period of the construction this config selects.
    fn segments(&self) -> usize {
        if let Some(l) = self.l {
            return l;
        }
        match (self.method, self.n) {
            (RunMethod::CubOneperiod, 3) => 2,
            (RunMethod::CubOneperiod, _) => 4,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n % 2 == 0 || !(self.n == 3 || self.n == 5) {
            return Err(Error::Domain(format!("order N must be 3 or 5, got {}", self.n)));
        }
        if self.method == RunMethod::Repro {
            if self.table.is_none() {
                return Err(Error::Domain("repro runs need a \"table\" entry".into()));
            }
            return Ok(());
        }
        if self.d == 0 || self.m == 0 {
            return Err(Error::Domain("D and M must be positive".into()));
        }
        if !(self.t > 0.0) {
            return Err(Error::Domain("T must be positive".into()));
        }
        if self.method == RunMethod::CubOneperiod && self.m != 1 {
            return Err(Error::Domain("one-period cubature uses M = 1".into()));
        }
        if matches!(self.method, RunMethod::CubOneperiod | RunMethod::CubMulti | RunMethod::Compare) {
            let ml = self.m * self.segments();
            if self.d % ml != 0 {
                return Err(Error::Domain(format!(
                    "D = {} must be a multiple of M·L = {ml} so grid nodes hit every path kink",
                    self.d
                )));
            }
        }
        if let Some(w) = self.w {
            if w == 0 {
                return Err(Error::Domain("W must be positive".into()));
            }
        }
        if let Some(s) = &self.solver {
            s.check()?;
        }
        Ok(())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::Construction(_) => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

/// Parse, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        // A global pool can be installed once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Solver { best, .. } = &e {
                for r in &best.residuals {
                    eprintln!("  {:<40} relative residual {:.3e}", r.label, r.relative);
                }
            }
            exit_code(&e)
        }
    }
}

fn writer(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

pub fn run<W: Write>(cmd: Command, out: &mut W) -> Result<i32> {
    match cmd {
        Command::Cubature { action } => cubature_cmd(action, out),
        Command::Price(a) => {
            let r = price(&a.method, &a.common)?;
            emit_price(&r, &a.out, out)?;
            Ok(EXIT_OK)
        }
        Command::Compare(a) => compare_cmd(&a, out),
        Command::Repro(a) => repro_cmd(&a, out),
        Command::Moments { action } => match action {
            MomentsCmd::Dump { system, out: path } => {
                let sys = build_system(&system)?;
                let json = serde_json::to_string_pretty(&sys)?;
                match writer(&path)? {
                    Some(mut w) => writeln!(w, "{json}")?,
                    None => writeln!(out, "{json}")?,
                }
                Ok(EXIT_OK)
            }
        },
        Command::Run { config } => run_config(&config, out),
    }
}

/// Moment system selected by the flags.
pub fn build_system(s: &SystemArgs) -> Result<MomentSystem> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Domain(format!("this system needs --{name}")))
    };
    match (s.model, s.order, s.multi) {
        (Dim::OneD, 3, true) => moment_targets_1d_n3_multi(need(s.delta, "delta")?),
        (Dim::OneD, 5, true) => moment_targets_1d_n5_multi(need(s.delta, "delta")?),
        (Dim::OneD, 3, false) => moment_targets_1d_n3_oneperiod(need(s.h, "H")?, need(s.t, "T")?),
        (Dim::OneD, 5, false) => moment_targets_1d_n5_oneperiod(need(s.h, "H")?, need(s.t, "T")?),
        (Dim::TwoD, 3, true) => moment_targets_2d_n3_multi(need(s.delta, "delta")?, s.rho),
        (Dim::TwoD, 5, false) => moment_targets_2d_n5_oneperiod(need(s.h, "H")?, need(s.t, "T")?, s.rho, !s.inhomogeneous),
        (m, n, multi) => Err(Error::Domain(format!(
            "no {} order-{n} {} system",
            if m == Dim::OneD { "one-driver" } else { "two-driver" },
            if multi { "multi-period" } else { "one-period" }
        ))),
    }
}

fn cubature_cmd<W: Write>(action: CubatureCmd, out: &mut W) -> Result<i32> {
    match action {
        CubatureCmd::Build {
            system,
            lambda1,
            theta1,
            solve,
            solver,
            out: path,
        } => {
            let measure = if solve {
                let sol = solve_moment_system(&build_system(&system)?, &solver.config())?;
                report_solve(&sol);
                sol.measure
            } else {
                closed_form(&system, lambda1, theta1, &solver)?
            };
            let json = measure.to_json()?;
            match writer(&path)? {
                Some(mut w) => writeln!(w, "{json}")?,
                None => writeln!(out, "{json}")?,
            }
            Ok(EXIT_OK)
        }
        CubatureCmd::Verify {
            measure,
            system,
            out: path,
        } => {
            let m = CubatureMeasure::from_json(&std::fs::read_to_string(&measure)?)?;
            let sys = build_system(&system)?;
            let res = verify(&m, &sys)?;
            match writer(&path)? {
                Some(w) => write_residual_csv(&res, w)?,
                None => write_residual_csv(&res, &mut *out)?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn report_solve(s: &SolveOutcome) {
    eprintln!(
        "solved: max relative residual {:.3e} (restart {}, {} accepted)",
        s.max_relative, s.restart, s.accepted
    );
}

fn closed_form(s: &SystemArgs, lambda1: Option<f64>, theta1: Option<f64>, solver: &SolverArgs) -> Result<CubatureMeasure> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Domain(format!("this construction needs --{name}")))
    };
    match (s.model, s.order, s.multi) {
        (Dim::OneD, 3, true) => build_1d_multi_n3(need(s.delta, "delta")?),
        (Dim::OneD, 5, true) => build_1d_multi_n5(need(s.delta, "delta")?, lambda1),
        (Dim::OneD, 3, false) => build_1d_oneperiod_n3(need(s.h, "H")?, need(s.t, "T")?),
        (Dim::TwoD, 3, true) => build_2d_multi_n3(need(s.delta, "delta")?, s.rho, theta1),
        _ => {
            let sys = build_system(s)?;
            let sol = solve_moment_system(&sys, &solver.config())?;
            report_solve(&sol);
            Ok(sol.measure)
        }
    }
}

fn load_model(common: &PricingArgs) -> Result<(SVIEModel, Option<ModelSpec>)> {
    let kernel = Kernel::power(common.h)?;
    let x0 = common.x0;
    match common.model.as_str() {
        "linear" => Ok((SVIEModel::linear_1d(kernel, x0.unwrap_or(0.0))?, None)),
        "cos" => Ok((SVIEModel::cos_1d(kernel, x0.unwrap_or(0.0))?, None)),
        path => {
            let spec = load_model_file(Path::new(path))?;
            let mut m = SVIEModel::from_spec(&spec)?;
            if let Some(x) = x0 {
                let mut v = m.x0().to_vec();
                v[0] = x;
                m = m.with_x0(v)?;
            }
            Ok((m, Some(spec)))
        }
    }
}

pub fn load_model_file(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read model file {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Measure for the pricing flags: stored, closed form, or solved.
fn pricing_measure(method: &Method, common: &PricingArgs, model: &SVIEModel) -> Result<CubatureMeasure> {
    if let Some(p) = &common.measure {
        return CubatureMeasure::from_json(&std::fs::read_to_string(p)?);
    }
    let multi = match method {
        Method::CubMulti => true,
        Method::CubOneperiod => false,
        _ => common.m.is_some(),
    };
    let t = common.t;
    let m = common.m.unwrap_or(1);
    if !multi && m != 1 {
        return Err(Error::Domain("one-period cubature uses M = 1".into()));
    }
    let d = model.d();
    let hurst = |i: usize| model.kernels()[i].hurst().unwrap_or(common.h);
    let solver = SolverConfig::default();
    let repeat = |p: CubatureMeasure| CubatureMeasure::repeated(p.periods[0].clone(), t, m);
    match (d, common.order, multi) {
        (1, 3, true) => repeat(build_1d_multi_n3(t / m as f64)?),
        (1, 5, true) => repeat(build_1d_multi_n5(t / m as f64, None)?),
        (1, 3, false) => build_1d_oneperiod_n3(hurst(0), t),
        (1, 5, false) => Ok(solve_moment_system(&moment_targets_1d_n5_oneperiod(hurst(0), t)?, &solver)?.measure),
        (2, 3, true) => repeat(build_2d_multi_n3(t / m as f64, model.corr()[0][1], None)?),
        (2, 5, false) => Ok(solve_moment_system(
            &moment_targets_2d_n5_oneperiod(hurst(1), t, model.corr()[0][1], true)?,
            &SolverConfig {
                threshold: 1e-3,
                ..solver
            },
        )?
        .measure),
        (d, n, multi) => Err(Error::Domain(format!(
            "no order-{n} {} construction for {d} drivers",
            if multi { "multi-period" } else { "one-period" }
        ))),
    }
}

/// Built-in `linear`, or a model file of the linear family.
fn is_linear(common: &PricingArgs, spec: &Option<ModelSpec>) -> bool {
    match spec {
        Some(s) => s.family == Family::Linear,
        None => common.model == "linear",
    }
}

fn check_alignment(grid: &SolveGrid, measure: &CubatureMeasure) -> Result<()> {
    let segs: usize = measure.segments().iter().sum();
    match grid.alignment_warning(segs) {
        Some(w) => Err(Error::Domain(format!("{w} (choose D as a multiple of M·L)"))),
        None => Ok(()),
    }
}

pub fn price(method: &Method, common: &PricingArgs) -> Result<PriceResult> {
    let g: Payoff = common.g.parse()?;
    let (model, spec) = load_model(common)?;
    for w in validate_hypotheses(&model, common.order).warnings {
        eprintln!("warning: {w}");
    }
    let grid = SolveGrid::new(common.d, common.t)?;
    match method {
        Method::Oracle => {
            if !is_linear(common, &spec) {
                return Err(Error::Domain("the Gaussian oracle needs the linear one-dimensional model".into()));
            }
            gaussian_oracle(&g, model.x0()[0], model.kernels()[0], common.t)
        }
        Method::Euler => euler_price(&model, &g, &grid, &EulerConfig::new(common.samples, common.seed)),
        _ => {
            let q = pricing_measure(method, common, &model)?;
            check_alignment(&grid, &q)?;
            cubature_price(&model, &g, &q, &grid)
        }
    }
}

fn emit_price<W: Write>(r: &PriceResult, path: &Option<PathBuf>, out: &mut W) -> Result<()> {
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["method", "value", "std_error", "atoms", "D", "M", "samples", "seed", "seconds"])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        c.write_record([
            format!("{:?}", r.method).to_lowercase(),
            format!("{:.10}", r.value),
            opt(r.std_error.map(|v| format!("{v:.3e}"))),
            opt(r.atoms.map(|v| v.to_string())),
            opt(r.steps.map(|v| v.to_string())),
            opt(r.periods.map(|v| v.to_string())),
            opt(r.samples.map(|v| v.to_string())),
            opt(r.seed.map(|v| v.to_string())),
            format!("{:.6}", r.seconds),
        ])?;
        c.flush()?;
        Ok(())
    };
    match writer(path)? {
        Some(mut w) => write(&mut w)?,
        None => write(out)?,
    }
    Ok(())
}

fn compare_cmd<W: Write>(a: &CompareArgs, out: &mut W) -> Result<i32> {
    let c = &a.common;
    let g: Payoff = c.g.parse()?;
    let (model, spec) = load_model(c)?;
    let grid = SolveGrid::new(c.d, c.t)?;
    let method = if c.m.is_some() { Method::CubMulti } else { Method::CubOneperiod };
    let q = pricing_measure(&method, c, &model)?;
    check_alignment(&grid, &q)?;
    let truth = if a.oracle_truth {
        if !is_linear(c, &spec) {
            return Err(Error::Domain("oracle truth needs the linear one-dimensional model".into()));
        }
        TruthSource::Value(gaussian_oracle(&g, model.x0()[0], model.kernels()[0], c.t)?.value)
    } else {
        TruthSource::PooledEuler
    };
    let rep = compare(&model, &g, &q, &grid, &EulerConfig::new(c.samples, c.seed), a.repeats, truth)?;
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["truth", "truth_se", "cubature", "e_cub", "e_mean", "sd", "percentile", "rank_percentile", "degenerate"])?;
        cw.write_record([
            format!("{:.10}", rep.truth),
            rep.truth_se.map(|v| format!("{v:.3e}")).unwrap_or_default(),
            format!("{:.10}", rep.cubature),
            format!("{:.3e}", rep.e_cub),
            format!("{:.3e}", rep.e_mean),
            format!("{:.3e}", rep.sd),
            format!("{:.4}", rep.percentile),
            format!("{:.4}", rep.rank_percentile),
            rep.degenerate.to_string(),
        ])?;
        cw.flush()?;
        Ok(())
    };
    match writer(&a.out)? {
        Some(mut w) => write(&mut w)?,
        None => write(out)?,
    }
    Ok(EXIT_OK)
}

fn repro_cmd<W: Write>(a: &ReproArgs, out: &mut W) -> Result<i32> {
    let opts = ReproOptions {
        seed: a.seed,
        repeats: a.repeats,
        samples: a.samples,
        skip_euler: a.skip_euler,
    };
    let names: Vec<&str> = if a.table == "all" {
        TABLES.to_vec()
    } else {
        vec![a.table.as_str()]
    };
    let mut ok = true;
    let mut csv_out = writer(&a.csv)?;
    for name in names {
        let rep = run_table(name, &opts)?;
        writeln!(out, "{}", rep.render())?;
        ok &= rep.all_passed();
        if let Some(w) = csv_out.as_mut() {
            rep.write_csv(&mut *w)?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

fn run_config<W: Write>(path: &Path, out: &mut W) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    if cfg.method == RunMethod::Repro {
        let a = ReproArgs {
            table: cfg.table.clone().unwrap_or_default(),
            seed: cfg.seed,
            repeats: None,
            samples: None,
            skip_euler: false,
            csv: cfg.output.clone(),
        };
        return repro_cmd(&a, out);
    }
    let model = match &cfg.model {
        Some(p) => {
            let p = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            p.to_string_lossy().into_owned()
        }
        None => "linear".into(),
    };
    let spec = if model == "linear" { None } else { Some(load_model_file(Path::new(&model))?) };
    let h = spec
        .as_ref()
        .and_then(|s| s.kernels.iter().find_map(|k| k.hurst()))
        .unwrap_or(1.5);
    let common = PricingArgs {
        model,
        g: cfg.payoff.clone(),
        x0: None,
        h,
        t: cfg.t,
        d: cfg.d,
        order: cfg.n,
        m: (cfg.method == RunMethod::CubMulti || cfg.method == RunMethod::Compare && cfg.m > 1).then_some(cfg.m),
        measure: None,
        samples: cfg.samples,
        seed: cfg.seed,
    };
    if common.model == "linear" && spec.is_none() {
        return Err(Error::Domain("run configs need a \"model\" file".into()));
    }
    match cfg.method {
        RunMethod::Compare => compare_cmd(
            &CompareArgs {
                common,
                repeats: cfg.repeats,
                oracle_truth: false,
                out: cfg.output.clone(),
            },
            out,
        ),
        m => {
            let method = match m {
                RunMethod::CubOneperiod => Method::CubOneperiod,
                RunMethod::CubMulti => Method::CubMulti,
                RunMethod::Euler => Method::Euler,
                _ => Method::Oracle,
            };
            let r = price(&method, &common)?;
            emit_price(&r, &cfg.output, out)?;
            Ok(EXIT_OK)
        }
    }
}
