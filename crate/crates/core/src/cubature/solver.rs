//! Numerical construction of symmetric cubature measures by weighted
//! nonlinear least squares with seeded multi-starts.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{CubatureMeasure, PeriodMeasure};
use super::system::{max_relative, CompiledSystem, EquationResidual};
use crate::error::{domain, Error, Result};
use crate::moments::MomentSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Damped Gauss–Newton (Levenberg–Marquardt).
    LevenbergMarquardt,
    /// Steepest descent with backtracking line search.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Per-equation weights β (moment conditions, then the weight
    /// constraint). `None`: `1/scale²`, so the objective is the sum of
    /// squared relative residuals (zero targets use their natural unit).
    pub beta: Option<Vec<f64>>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Accept a candidate when its max relative residual is at most this.
    pub threshold: f64,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: None,
            restarts: 64,
            seed: 0,
            max_iter: 2000,
            grad_tol: 1e-15,
            threshold: 1e-6,
            method: SolverMethod::LevenbergMarquardt,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iter == 0 {
            return domain("solver needs at least one restart and one iteration");
        }
        if !(self.grad_tol > 0.0 && self.threshold > 0.0) {
            return domain("solver tolerances must be positive");
        }
        if let Some(b) = &self.beta {
            if b.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return domain("solver weights β must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub measure: CubatureMeasure,
    pub residuals: Vec<EquationResidual>,
    pub max_relative: f64,
    /// Restart index that produced the measure.
    pub restart: usize,
    pub iterations: usize,
    /// Restarts that met the threshold.
    pub accepted: usize,
}

/// Parameter vector: `μ_k` (λ = μ²) when weights are free, then the
/// flattened slopes of every path.
struct Problem<'a> {
    sys: &'a CompiledSystem,
    w: usize,
    free_weights: bool,
    fixed_weight: f64,
    sqrt_beta: Vec<f64>,
    targets: Vec<f64>,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        let v = self.w * self.sys.vars_per_path;
        if self.free_weights {
            v + self.w
        } else {
            v
        }
    }

    fn n_res(&self) -> usize {
        self.sys.len() + usize::from(self.sys.system.weight_sum.is_some())
    }

    fn split<'p>(&self, x: &'p [f64]) -> (Vec<f64>, Vec<&'p [f64]>) {
        let vp = self.sys.vars_per_path;
        let off = if self.free_weights { self.w } else { 0 };
        let weights = if self.free_weights {
            x[..self.w].iter().map(|m| m * m).collect()
        } else {
            vec![self.fixed_weight; self.w]
        };
        let paths = (0..self.w).map(|k| &x[off + k * vp..off + (k + 1) * vp]).collect();
        (weights, paths)
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let (weights, paths) = self.split(x);
        let mut r: Vec<f64> = (0..self.sys.len())
            .map(|e| {
                let lhs: f64 = weights
                    .iter()
                    .zip(&paths)
                    .map(|(w, a)| w * self.sys.path_value(e, a))
                    .sum();
                self.sqrt_beta[e] * (lhs - self.targets[e])
            })
            .collect();
        if let Some(ws) = self.sys.system.weight_sum {
            let e = r.len();
            r.push(self.sqrt_beta[e] * (weights.iter().sum::<f64>() - ws));
        }
        r
    }

    fn jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let (weights, paths) = self.split(x);
        let vp = self.sys.vars_per_path;
        let off = if self.free_weights { self.w } else { 0 };
        let mut jac = DMatrix::zeros(self.n_res(), self.n_params());
        let mut r = Vec::with_capacity(self.n_res());
        let mut grad = vec![0.0; vp];
        for e in 0..self.sys.len() {
            let sb = self.sqrt_beta[e];
            let mut lhs = 0.0;
            for k in 0..self.w {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let p = self.sys.path_value_grad(e, paths[k], &mut grad);
                lhs += weights[k] * p;
                if self.free_weights {
                    jac[(e, k)] = sb * 2.0 * x[k] * p;
                }
                for (v, g) in grad.iter().enumerate() {
                    jac[(e, off + k * vp + v)] = sb * weights[k] * g;
                }
            }
            r.push(sb * (lhs - self.targets[e]));
        }
        if let Some(ws) = self.sys.system.weight_sum {
            let e = self.sys.len();
            let sb = self.sqrt_beta[e];
            if self.free_weights {
                for k in 0..self.w {
                    jac[(e, k)] = sb * 2.0 * x[k];
                }
            }
            r.push(sb * (weights.iter().sum::<f64>() - ws));
        }
        (r, jac)
    }

    fn cost(r: &[f64]) -> f64 {
        0.5 * r.iter().map(|v| v * v).sum::<f64>()
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_params());
        if self.free_weights {
            x.extend(std::iter::repeat_n((1.0 / (2.0 * self.w as f64)).sqrt(), self.w));
        }
        for _ in 0..self.w * self.sys.vars_per_path {
            x.push(StandardNormal.sample(rng));
        }
        x
    }

    fn levenberg_marquardt(&self, mut x: Vec<f64>, cfg: &SolverConfig) -> (Vec<f64>, usize) {
        let mut damping = 1e-3;
        let (mut r, mut jac) = self.jacobian(&x);
        let mut cost = Self::cost(&r);
        let mut it = 0;
        while it < cfg.max_iter {
            it += 1;
            let rv = DVector::from_column_slice(&r);
            let g = jac.transpose() * &rv;
            if g.amax() < cfg.grad_tol || cost < 1e-30 {
                break;
            }
            let jtj = jac.transpose() * &jac;
            let mut improved = false;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += damping * (1.0 + jtj[(i, i)]);
                }
                let Some(chol) = a.cholesky() else {
                    damping *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let tr = self.residuals(&trial);
                let tc = Self::cost(&tr);
                if tc.is_finite() && tc < cost {
                    let rel = step.norm() / (1e-30 + DVector::from_column_slice(&x).norm());
                    x = trial;
                    cost = tc;
                    damping = (damping / 3.0).max(1e-15);
                    improved = true;
                    if rel < 1e-16 {
                        return (x, it);
                    }
                    break;
                }
                damping *= 4.0;
            }
            if !improved {
                break;
            }
            let (nr, nj) = self.jacobian(&x);
            r = nr;
            jac = nj;
        }
        (x, it)
    }

    fn gradient_descent(&self, mut x: Vec<f64>, cfg: &SolverConfig) -> (Vec<f64>, usize) {
        let (mut r, mut jac) = self.jacobian(&x);
        let mut cost = Self::cost(&r);
        let mut step = 1.0;
        let mut it = 0;
        while it < cfg.max_iter {
            it += 1;
            let g = jac.transpose() * DVector::from_column_slice(&r);
            let gg = g.norm_squared();
            if g.amax() < cfg.grad_tol || cost < 1e-30 {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(g.iter()).map(|(a, b)| a - step * b).collect();
                let tc = Self::cost(&self.residuals(&trial));
                // Armijo condition.
                if tc.is_finite() && tc <= cost - 1e-4 * step * gg {
                    x = trial;
                    cost = tc;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            let (nr, nj) = self.jacobian(&x);
            r = nr;
            jac = nj;
        }
        (x, it)
    }

    fn to_measure(&self, x: &[f64]) -> Result<CubatureMeasure> {
        let (weights, paths) = self.split(x);
        let layout = self.sys.system.layout;
        let slopes = paths
            .iter()
            .map(|a| a.chunks(layout.d).map(|c| c.to_vec()).collect())
            .collect();
        let period = PeriodMeasure {
            weights,
            slopes,
            symmetric: true,
        };
        Ok(CubatureMeasure {
            period_len: self.sys.system.horizon(),
            periods: vec![period],
        })
    }
}

fn default_beta(sys: &CompiledSystem) -> Vec<f64> {
    let mut b: Vec<f64> = sys.scales().iter().map(|&s| 1.0 / (s * s)).collect();
    if let Some(ws) = sys.system.weight_sum {
        b.push(1.0 / (ws * ws));
    }
    b
}

/// Minimise `Σ β_e |LHS_e − target_e|²` over symmetric measures with the
/// system's layout. Restarts run in parallel; the result depends only on
/// `cfg`. Among accepted candidates the one with the smallest largest slope
/// wins; if none is accepted the best one is returned inside the error.
pub fn solve_moment_system(system: &MomentSystem, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.check()?;
    let sys = CompiledSystem::compile(system)?;
    solve_compiled(&sys, cfg)
}

pub fn solve_compiled(sys: &CompiledSystem, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.check()?;
    let layout = sys.system.layout;
    let beta = match &cfg.beta {
        Some(b) => b.clone(),
        None => default_beta(sys),
    };
    let n_res = sys.len() + usize::from(sys.system.weight_sum.is_some());
    if beta.len() != n_res {
        return domain(format!("{} β weights for {n_res} equations", beta.len()));
    }
    let problem = Problem {
        sys,
        w: layout.w,
        free_weights: sys.system.weight_sum.is_some(),
        fixed_weight: 1.0 / (2.0 * layout.w as f64),
        sqrt_beta: beta.iter().map(|b| b.sqrt()).collect(),
        targets: sys.targets(),
    };
    let candidates: Vec<Result<SolveOutcome>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            let x0 = problem.initial(&mut rng);
            let (x, iterations) = match cfg.method {
                SolverMethod::LevenbergMarquardt => problem.levenberg_marquardt(x0, cfg),
                SolverMethod::GradientDescent => problem.gradient_descent(x0, cfg),
            };
            let measure = problem.to_measure(&x)?;
            let residuals = sys.residuals(&measure.periods[0])?;
            let mr = max_relative(&residuals);
            Ok(SolveOutcome {
                measure,
                residuals,
                max_relative: if mr.is_finite() { mr } else { f64::INFINITY },
                restart,
                iterations,
                accepted: 0,
            })
        })
        .collect();
    let candidates = candidates.into_iter().collect::<Result<Vec<_>>>()?;
    let accepted: Vec<&SolveOutcome> = candidates
        .iter()
        .filter(|c| c.max_relative <= cfg.threshold)
        .collect();
    let n_acc = accepted.len();
    if let Some(best) = accepted.into_iter().min_by(|a, b| {
        let ma = a.measure.periods[0].max_slope();
        let mb = b.measure.periods[0].max_slope();
        ma.total_cmp(&mb).then(a.restart.cmp(&b.restart))
    }) {
        let mut out = best.clone();
        out.accepted = n_acc;
        return Ok(out);
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.max_relative.total_cmp(&b.max_relative))
        .expect("at least one restart");
    Err(Error::Solver {
        threshold: cfg.threshold,
        best: Box::new(best),
    })
}

/// Per-equation residuals of any single-period measure against a system
/// (explicit or symmetric), by direct path integration.
pub fn verify(measure: &CubatureMeasure, system: &MomentSystem) -> Result<Vec<EquationResidual>> {
    let delta = system.horizon();
    if (measure.period_len - delta).abs() > 1e-12 * delta {
        return domain(format!(
            "measure period {} differs from the system interval length {delta}",
            measure.period_len
        ));
    }
    let mut out = Vec::new();
    for c in &system.conditions {
        let mut lhs = 0.0;
        for (coef, spec) in &c.terms {
            let s = spec.on_interval(0.0, delta)?;
            lhs += coef * measure.period_expectation(0, &s)?;
        }
        let absolute = (lhs - c.target).abs();
        out.push(EquationResidual {
            label: c.label.clone(),
            lhs,
            target: c.target,
            absolute,
            relative: absolute / c.scale(),
        });
    }
    if let Some(ws) = system.weight_sum {
        let lhs = measure.periods[0].total_weight() / 2.0;
        let absolute = (lhs - ws).abs();
        out.push(EquationResidual {
            label: "weight sum".into(),
            lhs,
            target: ws,
            absolute,
            relative: absolute / ws.abs(),
        });
    }
    Ok(out)
}
