//! A moment system compiled into polynomials in the slope unknowns.
//!
//! Along a path with slopes `a`, each condition's left side is a polynomial
//! whose monomials come from the ordered cells. With mirrors of equal weight
//! the odd-degree part cancels, so
//! `E^Q = Σ_k λ_k (P(a_k) + P(−a_k)) = Σ_k λ_k · 2·P_even(a_k)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::PeriodMeasure;
use crate::error::{domain, Result};
use crate::moments::MomentSystem;
use crate::path::cell_coefficients;

/// `coef · ∏ a[v]` with `v = l·d + (j − 1)`.
#[derive(Debug, Clone, PartialEq)]
struct Monomial {
    vars: Vec<usize>,
    coef: f64,
}

#[derive(Debug, Clone)]
struct CompiledCondition {
    monomials: Vec<Monomial>,
    target: f64,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct CompiledSystem {
    pub system: MomentSystem,
    conditions: Vec<CompiledCondition>,
    /// Slope unknowns per path, `L·d`.
    pub vars_per_path: usize,
}

/// Per-equation residual of a candidate measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationResidual {
    pub label: String,
    pub lhs: f64,
    pub target: f64,
    pub absolute: f64,
    pub relative: f64,
}

impl CompiledSystem {
    pub fn compile(system: &MomentSystem) -> Result<Self> {
        let layout = system.layout;
        let d = layout.d;
        let l = layout.l;
        if d != system.d {
            return domain("layout driver count differs from the system's");
        }
        let delta = system.horizon();
        let conditions = system
            .conditions
            .par_iter()
            .map(|c| {
                let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for (coef, spec) in &c.terms {
                    let cells = cell_coefficients(spec, l)?;
                    let drivers = spec.word.iter().filter(|&&j| j != 0).count();
                    if drivers % 2 == 1 {
                        continue;
                    }
                    let norm = coef * 2.0 / delta.powf(drivers as f64 / 2.0);
                    for cell in cells {
                        let mut vars: Vec<usize> = cell
                            .segments
                            .iter()
                            .zip(&spec.word)
                            .filter(|(_, &j)| j != 0)
                            .map(|(&seg, &j)| seg * d + j - 1)
                            .collect();
                        vars.sort_unstable();
                        *acc.entry(vars).or_insert(0.0) += norm * cell.coefficient;
                    }
                }
                Ok(CompiledCondition {
                    monomials: acc
                        .into_iter()
                        .filter(|(_, c)| *c != 0.0)
                        .map(|(vars, coef)| Monomial { vars, coef })
                        .collect(),
                    target: c.target,
                    scale: c.scale(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledSystem {
            system: system.clone(),
            conditions,
            vars_per_path: l * d,
        })
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.target).collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.scale).collect()
    }

    /// `2·P_even_e(a)` for one path.
    pub fn path_value(&self, e: usize, a: &[f64]) -> f64 {
        self.conditions[e]
            .monomials
            .iter()
            .map(|m| m.coef * m.vars.iter().map(|&v| a[v]).product::<f64>())
            .sum()
    }

    /// Value and gradient of `2·P_even_e` at `a` (gradient added into `grad`).
    pub fn path_value_grad(&self, e: usize, a: &[f64], grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for m in &self.conditions[e].monomials {
            let prod: f64 = m.vars.iter().map(|&v| a[v]).product();
            value += m.coef * prod;
            for (i, &v) in m.vars.iter().enumerate() {
                let others: f64 = m
                    .vars
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, &u)| a[u])
                    .product();
                grad[v] += m.coef * others;
            }
        }
        value
    }

    /// Left sides for a symmetric measure given by weights and flattened
    /// slope vectors.
    pub fn lhs(&self, weights: &[f64], paths: &[Vec<f64>]) -> Vec<f64> {
        (0..self.len())
            .map(|e| {
                weights
                    .iter()
                    .zip(paths)
                    .map(|(w, a)| w * self.path_value(e, a))
                    .sum()
            })
            .collect()
    }

    /// Residual report for a symmetric period measure, weight constraint last.
    pub fn residuals(&self, period: &PeriodMeasure) -> Result<Vec<EquationResidual>> {
        if !period.symmetric {
            return domain("compiled systems evaluate symmetric (mirror-closed) measures; use the explicit verifier");
        }
        let layout = self.system.layout;
        if period.segments() != layout.l || period.d() != layout.d {
            return domain(format!(
                "measure has L={}, d={} but the system expects L={}, d={}",
                period.segments(),
                period.d(),
                layout.l,
                layout.d
            ));
        }
        let paths: Vec<Vec<f64>> = period
            .slopes
            .iter()
            .map(|p| p.iter().flatten().copied().collect())
            .collect();
        let lhs = self.lhs(&period.weights, &paths);
        let mut out: Vec<EquationResidual> = self
            .conditions
            .iter()
            .zip(&self.system.conditions)
            .zip(lhs)
            .map(|((c, src), lhs)| {
                let absolute = (lhs - c.target).abs();
                EquationResidual {
                    label: src.label.clone(),
                    lhs,
                    target: c.target,
                    absolute,
                    relative: absolute / c.scale,
                }
            })
            .collect();
        if let Some(ws) = self.system.weight_sum {
            let lhs: f64 = period.weights.iter().sum();
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
}

pub fn max_relative(res: &[EquationResidual]) -> f64 {
    res.iter().fold(0.0, |m, r| m.max(r.relative))
}

/// Residual CSV: label, lhs, target, absolute, relative.
pub fn write_residual_csv<W: std::io::Write>(res: &[EquationResidual], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in res {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
