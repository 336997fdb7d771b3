//! Wiener expectations of kernel-weighted iterated Stratonovich integrals.
//!
//! Legs are consumed from the outermost one: a `dt` leg becomes a
//! deterministic time variable; a Brownian leg must pair with the next leg
//! (also Brownian), contributing `ρ_{j₁j₂}/2` and identifying the two times;
//! anything else has zero expectation. What remains is a constant times a
//! deterministic simplex integral.

use serde::{Deserialize, Serialize};

use super::simplex::{GapFactor, SimplexIntegral};
use super::spec::IteratedIntegralSpec;
use crate::error::{domain, Result};
use crate::quad::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Quadrature,
    Hybrid,
}

impl Method {
    pub fn combine(self, other: Method) -> Method {
        if self == other {
            self
        } else {
            Method::Hybrid
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub value: f64,
    pub method: Method,
}

/// `const × simplex integral`, or `None` when the expectation vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub constant: f64,
    pub integral: SimplexIntegral,
}

pub fn reduce(spec: &IteratedIntegralSpec, corr: &[Vec<f64>]) -> Result<Option<Reduction>> {
    spec.check()?;
    let n = spec.n();
    let d = corr.len();
    if spec.max_driver() > d {
        return domain(format!(
            "word uses driver {} but the correlation matrix has {d} drivers",
            spec.max_driver()
        ));
    }
    let mut var_of = vec![0usize; n + 1];
    let mut m = 0usize;
    let mut constant = 1.0;
    let mut l = 1;
    while l <= n {
        let j = spec.word[l - 1];
        if j == 0 {
            m += 1;
            var_of[l] = m;
            l += 1;
            continue;
        }
        if l == n || spec.word[l] == 0 {
            return Ok(None);
        }
        let rho = corr[j - 1][spec.word[l] - 1];
        if rho == 0.0 {
            return Ok(None);
        }
        constant *= rho / 2.0;
        m += 1;
        var_of[l] = m;
        var_of[l + 1] = m;
        l += 2;
    }
    let start_idx = m + 1;
    let mut factors = Vec::new();
    for f in &spec.factors {
        let hi = var_of[f.anchor];
        let lo = var_of[f.leg];
        if hi == lo {
            let diag = f.kernel.diagonal();
            if diag == 0.0 {
                return Ok(None);
            }
            constant *= diag;
            continue;
        }
        let e = f.kernel.exponent();
        if e != 0.0 {
            factors.push(GapFactor { hi, lo, exp: e });
        }
    }
    for (l, &a) in spec.monomials.iter().enumerate() {
        if a > 0 {
            factors.push(GapFactor {
                hi: var_of[l + 1],
                lo: start_idx,
                exp: a as f64,
            });
        }
    }
    Ok(Some(Reduction {
        constant,
        integral: SimplexIntegral {
            m,
            factors,
            start: spec.start,
            end: spec.end,
        },
    }))
}

fn simplex_tolerance() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 400,
    }
}

/// Exact expectation under correlated Brownian drivers (`corr` indexed from
/// driver 1). Closed form where available, nested quadrature otherwise.
pub fn wiener_expectation(spec: &IteratedIntegralSpec, corr: &[Vec<f64>]) -> Result<MomentValue> {
    match reduce(spec, corr)? {
        None => Ok(MomentValue {
            value: 0.0,
            method: Method::Analytic,
        }),
        Some(r) => match r.integral.analytic() {
            Some(v) => Ok(MomentValue {
                value: r.constant * v,
                method: Method::Analytic,
            }),
            None => Ok(MomentValue {
                value: r.constant * r.integral.quadrature(simplex_tolerance()),
                method: Method::Quadrature,
            }),
        },
    }
}

/// Same expectation, forcing the nested-quadrature route.
pub fn wiener_expectation_quadrature(spec: &IteratedIntegralSpec, corr: &[Vec<f64>]) -> Result<f64> {
    Ok(match reduce(spec, corr)? {
        None => 0.0,
        Some(r) => r.constant * r.integral.quadrature(simplex_tolerance()),
    })
}

/// Sum of `coef × E[spec]`.
pub fn combined_expectation(
    terms: &[(f64, IteratedIntegralSpec)],
    corr: &[Vec<f64>],
) -> Result<MomentValue> {
    let mut value = 0.0;
    let mut method: Option<Method> = None;
    for (c, s) in terms {
        let mv = wiener_expectation(s, corr)?;
        value += c * mv.value;
        method = Some(match method {
            None => mv.method,
            Some(m) => m.combine(mv.method),
        });
    }
    Ok(MomentValue {
        value,
        method: method.unwrap_or(Method::Analytic),
    })
}

/// Euler Beta function `B(α, β) = ∫₀¹ (1−t)^{α−1} t^{β−1} dt`.
pub fn beta_integral(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return domain(format!("beta integral needs positive arguments, got ({alpha}, {beta})"));
    }
    Ok(statrs::function::beta::beta(alpha, beta))
}
