//! Deterministic integrals over the ordered simplex
//! `end = u_0 ≥ u_1 ≥ ⋯ ≥ u_m ≥ u_{m+1} = start` of products of
//! powers of differences `(u_a − u_b)^e`.

use std::collections::HashMap;

use statrs::function::gamma::ln_gamma;

use crate::kernel::pow;
use crate::quad::{integrate_nested, NestedIntegrand, Tolerance};

/// `(u_hi − u_lo)^exp` with `hi < lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapFactor {
    pub hi: usize,
    pub lo: usize,
    pub exp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexIntegral {
    pub m: usize,
    pub factors: Vec<GapFactor>,
    pub start: f64,
    pub end: f64,
}

impl SimplexIntegral {
    /// Closed form when every factor is a power of one consecutive gap
    /// (Dirichlet integral), or a non-negative integer power of a sum of
    /// gaps (expanded multinomially). `None` otherwise.
    pub fn analytic(&self) -> Option<f64> {
        let gaps = self.m + 1;
        let mut base = vec![0.0; gaps];
        let mut poly: HashMap<Vec<u32>, f64> = HashMap::new();
        poly.insert(vec![0; gaps], 1.0);
        for f in &self.factors {
            if f.exp == 0.0 {
                continue;
            }
            if f.lo == f.hi + 1 {
                base[f.hi] += f.exp;
                continue;
            }
            if f.exp < 0.0 || f.exp.fract() != 0.0 {
                return None;
            }
            let k = f.exp as u32;
            let parts = f.lo - f.hi;
            let comps = compositions(k, parts);
            let mut next: HashMap<Vec<u32>, f64> = HashMap::with_capacity(poly.len() * comps.len());
            for (expo, coef) in &poly {
                for (c, mult) in &comps {
                    let mut e = expo.clone();
                    for (i, ci) in c.iter().enumerate() {
                        e[f.hi + i] += ci;
                    }
                    *next.entry(e).or_insert(0.0) += coef * mult;
                }
            }
            poly = next;
        }
        let len = self.end - self.start;
        // Deterministic summation order.
        let mut terms: Vec<(Vec<u32>, f64)> = poly.into_iter().collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut total = 0.0;
        for (extra, coef) in terms {
            let e: Vec<f64> = base.iter().zip(&extra).map(|(b, x)| b + *x as f64).collect();
            total += coef * dirichlet(&e, len);
        }
        Some(total)
    }

    /// Nested adaptive Gauss–Kronrod evaluation.
    pub fn quadrature(&self, tol: Tolerance) -> f64 {
        let levels: Vec<usize> = self.factors.iter().map(|f| self.level_of(f)).collect();
        let nested = NestedSimplex {
            s: self,
            levels,
        };
        integrate_nested(&nested, self.end, tol)
    }

    fn index_level(&self, idx: usize) -> usize {
        if idx == 0 || idx == self.m + 1 {
            0
        } else {
            idx
        }
    }

    fn level_of(&self, f: &GapFactor) -> usize {
        self.index_level(f.hi).max(self.index_level(f.lo))
    }
}

struct NestedSimplex<'a> {
    s: &'a SimplexIntegral,
    levels: Vec<usize>,
}

impl NestedSimplex<'_> {
    fn var(&self, idx: usize, t: &[f64]) -> f64 {
        if idx == 0 {
            self.s.end
        } else if idx == self.s.m + 1 {
            self.s.start
        } else {
            t[idx]
        }
    }
}

impl NestedIntegrand for NestedSimplex<'_> {
    fn depth(&self) -> usize {
        self.s.m
    }

    fn bounds(&self, level: usize, t: &[f64]) -> (f64, f64) {
        (self.s.start, t[level - 1])
    }

    fn weight(&self, level: usize, t: &[f64]) -> f64 {
        let mut w = 1.0;
        for (f, &lv) in self.s.factors.iter().zip(&self.levels) {
            if lv == level {
                let diff = self.var(f.hi, t) - self.var(f.lo, t);
                w *= pow(diff.max(0.0), f.exp);
            }
        }
        w
    }
}

/// `∫_{gaps ≥ 0, Σ gaps = len} ∏ g_i^{e_i}` over the free gaps
/// `= len^{Σ(e_i+1) − 1} ∏Γ(e_i+1) / Γ(Σ(e_i+1))`.
fn dirichlet(e: &[f64], len: f64) -> f64 {
    let s: f64 = e.iter().map(|x| x + 1.0).sum();
    let lg: f64 = e.iter().map(|x| ln_gamma(x + 1.0)).sum::<f64>() - ln_gamma(s);
    pow(len, s - 1.0) * lg.exp()
}

/// Compositions of `k` into `parts` non-negative parts with multinomial
/// coefficients.
fn compositions(k: u32, parts: usize) -> Vec<(Vec<u32>, f64)> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, parts, &mut Vec::new(), &mut out);
    let fact = |n: u32| (1..=n).map(|x| x as f64).product::<f64>();
    out.into_iter()
        .map(|c| {
            let denom: f64 = c.iter().map(|&x| fact(x)).product();
            let coef = fact(k) / denom;
            (c, coef)
        })
        .collect()
}
