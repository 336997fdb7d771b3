//! Convolution kernels `K(t, r) = k(t - r)`: either identically one or the
//! power law `(t - r)^{H - 1/2}` with `H > 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawKernel")]
pub enum Kernel {
    One,
    Power {
        #[serde(rename = "H")]
        h: f64,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawKernel {
    One,
    Power {
        #[serde(rename = "H")]
        h: f64,
    },
}

impl TryFrom<RawKernel> for Kernel {
    type Error = Error;
    fn try_from(raw: RawKernel) -> Result<Self> {
        match raw {
            RawKernel::One => Ok(Kernel::One),
            RawKernel::Power { h } => Kernel::power(h),
        }
    }
}

impl Kernel {
    /// Power-law kernel; rejects the rough regime `H <= 1/2`.
    pub fn power(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.5) {
            return domain(format!("power-law kernel requires H > 1/2, got {h}"));
        }
        Ok(Kernel::Power { h })
    }

    pub fn hurst(&self) -> Option<f64> {
        match self {
            Kernel::One => None,
            Kernel::Power { h } => Some(*h),
        }
    }

    /// Exponent `e` in `(t - r)^e`; zero for the constant kernel.
    pub fn exponent(&self) -> f64 {
        match self {
            Kernel::One => 0.0,
            Kernel::Power { h } => h - 0.5,
        }
    }

    /// True for `K ≡ 1`, i.e. the state is a semimartingale component.
    pub fn is_one(&self) -> bool {
        matches!(self, Kernel::One)
    }

    /// `K(t, t)`: 1 for the constant kernel, 0 for the power law.
    pub fn diagonal(&self) -> f64 {
        match self {
            Kernel::One => 1.0,
            Kernel::Power { .. } => 0.0,
        }
    }

    /// Value of the lag function `k(u)`, `u = t - r >= 0`.
    #[inline]
    pub fn lag(&self, u: f64) -> f64 {
        match self {
            Kernel::One => 1.0,
            Kernel::Power { h } => {
                if u > 0.0 {
                    pow(u, h - 0.5)
                } else {
                    0.0
                }
            }
        }
    }

    /// `K(t, r)` without the domain check; `r >= t` yields the diagonal value.
    #[inline]
    pub fn value(&self, t: f64, r: f64) -> f64 {
        self.lag(t - r)
    }

    /// `K(t, r)` for `0 <= r <= t`.
    pub fn eval(&self, t: f64, r: f64) -> Result<f64> {
        if r > t || r < 0.0 || !t.is_finite() || !r.is_finite() {
            return domain(format!("kernel evaluated outside 0 <= r <= t (t={t}, r={r})"));
        }
        Ok(self.value(t, r))
    }
}

/// `x^e` for `x >= 0`, using integer powers when the exponent allows.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else if x <= 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}
