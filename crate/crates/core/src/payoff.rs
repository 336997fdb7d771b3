//! Terminal payoffs `G(X_T)` reading one state coordinate.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffKind {
    Cos,
    Square,
    /// `(x - strike)^+`
    Call { strike: f64 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffKind::Cos => write!(f, "cos(x)"),
            PayoffKind::Square => write!(f, "x^2"),
            PayoffKind::Call { strike } => write!(f, "(x-{strike})^+"),
            PayoffKind::Custom(_) => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Payoff {
    pub kind: PayoffKind,
    /// State coordinate the payoff reads (the price `S` in the Heston family).
    #[serde(default)]
    pub index: usize,
}

impl Payoff {
    pub fn new(kind: PayoffKind) -> Self {
        Payoff { kind, index: 0 }
    }

    pub fn cos() -> Self {
        Self::new(PayoffKind::Cos)
    }

    pub fn square() -> Self {
        Self::new(PayoffKind::Square)
    }

    pub fn call(strike: f64) -> Self {
        Self::new(PayoffKind::Call { strike })
    }

    pub fn reading(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match &self.kind {
            PayoffKind::Cos => x.cos(),
            PayoffKind::Square => x * x,
            PayoffKind::Call { strike } => (x - strike).max(0.0),
            PayoffKind::Custom(f) => f(x),
        }
    }

    #[inline]
    pub fn eval(&self, state: &[f64]) -> f64 {
        self.g(state[self.index])
    }

    /// Points where `g` fails to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            PayoffKind::Call { strike } => vec![*strike],
            _ => Vec::new(),
        }
    }

    /// Warning for payoffs that violate the smoothness the error bounds assume.
    pub fn smoothness_warning(&self) -> Option<String> {
        match &self.kind {
            PayoffKind::Call { strike } => Some(format!(
                "payoff (x-{strike})^+ is not smooth; cubature error bounds do not formally apply"
            )),
            _ => None,
        }
    }
}

impl FromStr for Payoff {
    type Err = Error;

    /// `cos`, `square` (or `x2`), `call:<strike>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        match s {
            "cos" => Ok(Payoff::cos()),
            "square" | "x2" | "x^2" => Ok(Payoff::square()),
            _ => {
                if let Some(k) = s.strip_prefix("call:") {
                    let strike: f64 = k
                        .parse()
                        .map_err(|_| Error::Domain(format!("bad call strike '{k}'")))?;
                    Ok(Payoff::call(strike))
                } else {
                    Err(Error::Domain(format!(
                        "unknown payoff '{s}' (expected cos, square, call:<strike>)"
                    )))
                }
            }
        }
    }
}
