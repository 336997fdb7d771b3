//! Price estimators — cubature, Gaussian oracle, Euler Monte Carlo — and
//! the error-percentile comparison between cubature and repeated Euler runs.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cubature::CubatureMeasure;
use crate::error::{domain, Error, Result};
use crate::kernel::Kernel;
use crate::model::SVIEModel;
use crate::payoff::Payoff;
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::volterra::{kernel_table, midpoint_increments, solve_with_increments, SolveGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceMethod {
    Cubature,
    Oracle,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub value: f64,
    pub method: PriceMethod,
    /// Composed atom count (cubature).
    pub atoms: Option<usize>,
    pub steps: Option<usize>,
    pub periods: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Monte-Carlo standard error (Euler) or quadrature error estimate.
    pub std_error: Option<f64>,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

impl PriceResult {
    fn bare(value: f64, method: PriceMethod, seconds: f64) -> Self {
        PriceResult {
            value,
            method,
            atoms: None,
            steps: None,
            periods: None,
            samples: None,
            seed: None,
            std_error: None,
            seconds,
            warnings: Vec::new(),
        }
    }
}

/// `Σ_k λ_k G(X^D_T(ω_k))` over every composed atom. Atoms are solved in
/// parallel; the sum runs in atom order so the value does not depend on
/// the worker count.
pub fn cubature_price(
    model: &SVIEModel,
    payoff: &Payoff,
    measure: &CubatureMeasure,
    grid: &SolveGrid,
) -> Result<PriceResult> {
    let clock = Instant::now();
    if (measure.horizon() - grid.horizon).abs() > 1e-9 * grid.horizon {
        return domain(format!(
            "measure horizon {} differs from the grid horizon {}",
            measure.horizon(),
            grid.horizon
        ));
    }
    if measure.d() != model.d() {
        return domain(format!("measure has {} drivers, model expects {}", measure.d(), model.d()));
    }
    if payoff.index >= model.d1() {
        return domain(format!("payoff reads state {} of a {}-state model", payoff.index, model.d1()));
    }
    let kern = kernel_table(model, grid);
    let n = measure.atom_count();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let atom = measure.atom(k)?;
            let inc = midpoint_increments(&atom.path, grid);
            let sol = solve_with_increments(model, &inc, &kern, grid.steps, false)?;
            Ok(atom.weight * payoff.eval(&sol.terminal))
        })
        .collect::<Result<Vec<_>>>()?;
    let value: f64 = terms.iter().sum();
    let mut warnings = Vec::new();
    warnings.extend(payoff.smoothness_warning());
    let segs: usize = measure.segments().iter().sum();
    warnings.extend(grid.alignment_warning(segs));
    Ok(PriceResult {
        atoms: Some(n),
        steps: Some(grid.steps),
        periods: Some(measure.m()),
        warnings,
        ..PriceResult::bare(value, PriceMethod::Cubature, clock.elapsed().as_secs_f64())
    })
}

/// `E[G(x₀ + σZ)]`, `σ² = ∫_0^T k(T−r)² dr`, for the 1-D model with
/// `V ≡ 1` (Gaussian terminal law).
pub fn gaussian_oracle(payoff: &Payoff, x0: f64, kernel: Kernel, t: f64) -> Result<PriceResult> {
    let clock = Instant::now();
    if !(t.is_finite() && t > 0.0) {
        return domain(format!("horizon must be positive, got {t}"));
    }
    let var = match kernel {
        Kernel::One => t,
        Kernel::Power { h } => t.powf(2.0 * h) / (2.0 * h),
    };
    let sigma = var.sqrt();
    let breaks: Vec<f64> = payoff.kinks().iter().map(|k| (k - x0) / sigma).collect();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let r = integrate_with_breaks(
        |z| norm * (-0.5 * z * z).exp() * payoff.g(x0 + sigma * z),
        -12.0,
        12.0,
        &breaks,
        Tolerance {
            abs: 1e-13,
            rel: 1e-13,
            max_intervals: 400,
        },
    );
    Ok(PriceResult {
        std_error: Some(r.error),
        ..PriceResult::bare(r.value, PriceMethod::Oracle, clock.elapsed().as_secs_f64())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerConfig {
    pub samples: usize,
    pub seed: u64,
    /// Repeat index; selects an independent family of RNG streams.
    pub repeat: u64,
    /// Drop the Brownian increments (drift-only solve).
    pub zero_noise: bool,
}

impl EulerConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        EulerConfig {
            samples,
            seed,
            repeat: 0,
            zero_noise: false,
        }
    }
}

/// Samples per RNG stream; fixed so results do not depend on threads.
const CHUNK: usize = 4096;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Itô drift correction for `K ≡ 1` states:
/// `½ Σ_{j,j'≥1} ρ_{jj'} Σ_{k∈I₀} ∂_k V^i_j · V^k_{j'}`.
fn ito_correction(model: &SVIEModel, semi: &[usize], x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
    let d = model.d();
    let corr = model.corr();
    out.iter_mut().for_each(|v| *v = 0.0);
    for &i in semi {
        let mut c = 0.0;
        for j in 1..=d {
            if !model.has_coeff(i, j) {
                continue;
            }
            for &k in semi {
                // ∂_k V^i_j by central difference.
                let step = 1e-6 * x[k].abs().max(1.0);
                scratch.clear();
                scratch.extend_from_slice(x);
                scratch[k] = x[k] + step;
                let up = model.coeff(i, j, scratch);
                scratch[k] = x[k] - step;
                let dn = model.coeff(i, j, scratch);
                let dv = (up - dn) / (2.0 * step);
                if dv == 0.0 {
                    continue;
                }
                for jp in 1..=d {
                    let rho = corr[j - 1][jp - 1];
                    if rho != 0.0 && model.has_coeff(k, jp) {
                        c += rho * dv * model.coeff(k, jp, x);
                    }
                }
            }
        }
        out[i] = 0.5 * c;
    }
}

/// One Euler path of the Volterra equation; returns `X_T`.
fn euler_path(
    model: &SVIEModel,
    grid: &SolveGrid,
    kern: &[Vec<f64>],
    semi: &[usize],
    rng: &mut ChaCha8Rng,
    zero_noise: bool,
    f: &mut [f64],
) -> Result<Vec<f64>> {
    let d1 = model.d1();
    let d = model.d();
    let h = grid.h();
    let sh = h.sqrt();
    let a = model.corr_factor();
    let x0 = model.x0();
    let mut x = x0.to_vec();
    let mut z = vec![0.0; d];
    let mut db = vec![0.0; d];
    let mut corr = vec![0.0; d1];
    let mut scratch = Vec::with_capacity(d1);
    for l in 0..grid.steps {
        if zero_noise {
            db.iter_mut().for_each(|v| *v = 0.0);
        } else {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            for (r, dbr) in db.iter_mut().enumerate() {
                *dbr = sh * (0..d).map(|c| a[r * d + c] * z[c]).sum::<f64>();
            }
        }
        if !semi.is_empty() {
            ito_correction(model, semi, &x, &mut corr, &mut scratch);
        }
        for i in 0..d1 {
            let mut s = (model.coeff(i, 0, &x) + corr[i]) * h;
            for j in 1..=d {
                if model.has_coeff(i, j) {
                    s += model.coeff(i, j, &x) * db[j - 1];
                }
            }
            f[l * d1 + i] = s;
        }
        let n = l + 1;
        for i in 0..d1 {
            let k = &kern[i];
            let mut s = x0[i];
            for al in 0..n {
                s += k[n - al] * f[al * d1 + i];
            }
            if !s.is_finite() {
                return Err(Error::NonFinite { step: n, coord: i });
            }
            x[i] = s;
        }
    }
    Ok(x)
}

/// Monte-Carlo mean of `G(X^D_T)` over `samples` Euler paths. Streams are
/// keyed by `(seed, repeat, chunk)`, so the estimate is bit-identical for
/// any worker count.
pub fn euler_price(model: &SVIEModel, payoff: &Payoff, grid: &SolveGrid, cfg: &EulerConfig) -> Result<PriceResult> {
    let clock = Instant::now();
    if cfg.samples == 0 {
        return domain("Euler needs at least one sample");
    }
    if payoff.index >= model.d1() {
        return domain(format!("payoff reads state {} of a {}-state model", payoff.index, model.d1()));
    }
    let kern = kernel_table(model, grid);
    let semi = model.semimartingale_states();
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<(Compensated, Compensated)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((cfg.repeat << 32) | c as u64);
            let n = CHUNK.min(cfg.samples - c * CHUNK);
            let mut f = vec![0.0; grid.steps * model.d1()];
            let mut s = Compensated::default();
            let mut s2 = Compensated::default();
            for _ in 0..n {
                let x = euler_path(model, grid, &kern, &semi, &mut rng, cfg.zero_noise, &mut f)?;
                let g = payoff.eval(&x);
                s.add(g);
                s2.add(g * g);
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = Compensated::default();
    let mut s2 = Compensated::default();
    for (a, b) in parts {
        s.add(a.value());
        s2.add(b.value());
    }
    let n = cfg.samples as f64;
    let mean = s.value() / n;
    let var = if cfg.samples > 1 {
        ((s2.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    warnings.extend(payoff.smoothness_warning());
    Ok(PriceResult {
        steps: Some(grid.steps),
        samples: Some(cfg.samples),
        seed: Some(cfg.seed),
        std_error: Some((var / n).sqrt()),
        warnings,
        ..PriceResult::bare(mean, PriceMethod::Euler, clock.elapsed().as_secs_f64())
    })
}

/// Source of the reference value for error computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthSource {
    /// A known value (e.g. the Gaussian oracle).
    Value(f64),
    /// Mean of the `R` Euler estimates themselves.
    PooledEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub truth: f64,
    /// Standard error of the truth (pooled Euler only).
    pub truth_se: Option<f64>,
    pub cubature: f64,
    pub e_cub: f64,
    pub euler_values: Vec<f64>,
    pub euler_errors: Vec<f64>,
    pub e_mean: f64,
    pub sd: f64,
    /// `Φ((e_cub − e_mean)/SD)`.
    pub percentile: f64,
    /// Fraction of Euler errors strictly below `e_cub`.
    pub rank_percentile: f64,
    pub degenerate: bool,
    pub cubature_seconds: f64,
    pub euler_seconds_mean: f64,
}

/// Mean and sample standard deviation (`n − 1`).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = Compensated::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut q = Compensated::default();
    xs.iter().for_each(|&x| q.add((x - mean) * (x - mean)));
    (mean, (q.value() / (n - 1.0)).sqrt())
}

/// Percentile of `e_cub` under the normal approximation; `(value, degenerate)`.
pub fn normal_percentile(e_cub: f64, e_mean: f64, sd: f64) -> (f64, bool) {
    if sd > 0.0 && sd.is_finite() {
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        (n.cdf((e_cub - e_mean) / sd), false)
    } else if e_cub < e_mean {
        (0.0, true)
    } else if e_cub > e_mean {
        (1.0, true)
    } else {
        (0.5, true)
    }
}

/// Statistics from a cubature value and `R` Euler estimates.
pub fn compare_values(cubature: f64, euler_values: Vec<f64>, truth: TruthSource) -> Result<ComparisonReport> {
    if euler_values.is_empty() {
        return domain("comparison needs at least one Euler repeat");
    }
    let (pooled, pooled_sd) = mean_sd(&euler_values);
    let (truth, truth_se) = match truth {
        TruthSource::Value(v) => (v, None),
        TruthSource::PooledEuler => (pooled, Some(pooled_sd / (euler_values.len() as f64).sqrt())),
    };
    let e_cub = (cubature - truth).abs();
    let euler_errors: Vec<f64> = euler_values.iter().map(|y| (y - truth).abs()).collect();
    let (e_mean, sd) = mean_sd(&euler_errors);
    let (percentile, degenerate) = normal_percentile(e_cub, e_mean, sd);
    let below = euler_errors.iter().filter(|&&e| e < e_cub).count();
    Ok(ComparisonReport {
        truth,
        truth_se,
        cubature,
        e_cub,
        rank_percentile: below as f64 / euler_errors.len() as f64,
        euler_values,
        euler_errors,
        e_mean,
        sd,
        percentile,
        degenerate,
        cubature_seconds: 0.0,
        euler_seconds_mean: 0.0,
    })
}

/// Cubature price against `repeats` independent Euler estimates, each with
/// `euler.samples` paths; repeat `r` uses stream family `r`.
pub fn compare(
    model: &SVIEModel,
    payoff: &Payoff,
    measure: &CubatureMeasure,
    grid: &SolveGrid,
    euler: &EulerConfig,
    repeats: usize,
    truth: TruthSource,
) -> Result<ComparisonReport> {
    let cub = cubature_price(model, payoff, measure, grid)?;
    let runs: Vec<PriceResult> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            euler_price(
                model,
                payoff,
                grid,
                &EulerConfig {
                    repeat: r,
                    ..*euler
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let secs = runs.iter().map(|r| r.seconds).sum::<f64>() / runs.len().max(1) as f64;
    let mut rep = compare_values(cub.value, runs.into_iter().map(|r| r.value).collect(), truth)?;
    rep.cubature_seconds = cub.seconds;
    rep.euler_seconds_mean = secs;
    Ok(rep)
}
