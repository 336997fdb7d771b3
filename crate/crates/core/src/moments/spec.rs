use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::kernel::Kernel;

/// `K(t_anchor, t_leg)`, with `t_0` the interval end and `anchor < leg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFactor {
    pub kernel: Kernel,
    pub anchor: usize,
    pub leg: usize,
}

/// `∫_{start ≤ t_n ≤ ⋯ ≤ t_1 ≤ end} ∏ K(t_κ, t_l) ∏ (t_l − start)^{α_l} ∘dB^{j_n}_{t_n} ⋯ ∘dB^{j_1}_{t_1}`
/// where `B^0_t = t`. Leg 1 is the outermost integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteratedIntegralSpec {
    pub word: Vec<usize>,
    pub factors: Vec<KernelFactor>,
    pub monomials: Vec<u32>,
    pub start: f64,
    pub end: f64,
}

impl IteratedIntegralSpec {
    pub fn new(
        word: Vec<usize>,
        factors: Vec<KernelFactor>,
        monomials: Vec<u32>,
        start: f64,
        end: f64,
    ) -> Result<Self> {
        let spec = IteratedIntegralSpec {
            word,
            factors,
            monomials,
            start,
            end,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Plain iterated integral of the word, no kernels or monomials.
    pub fn word(word: Vec<usize>, start: f64, end: f64) -> Result<Self> {
        let n = word.len();
        Self::new(word, Vec::new(), vec![0; n], start, end)
    }

    /// `∏_l K(t_{κ_l}, t_l)` for a single kernel and an anchor sequence `κ`.
    pub fn kernel_chain(
        kernel: Kernel,
        anchors: &[usize],
        word: Vec<usize>,
        start: f64,
        end: f64,
    ) -> Result<Self> {
        if anchors.len() != word.len() {
            return domain("anchor sequence and word differ in length");
        }
        let factors = anchors
            .iter()
            .enumerate()
            .map(|(i, &a)| KernelFactor {
                kernel,
                anchor: a,
                leg: i + 1,
            })
            .collect();
        let n = word.len();
        Self::new(word, factors, vec![0; n], start, end)
    }

    pub fn with_monomials(mut self, monomials: Vec<u32>) -> Result<Self> {
        self.monomials = monomials;
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.word.len();
        if !(self.start.is_finite() && self.end.is_finite() && self.start < self.end) {
            return domain(format!(
                "interval [{}, {}] is not a proper interval",
                self.start, self.end
            ));
        }
        if self.monomials.len() != n {
            return domain(format!(
                "{} monomial exponents for a word of length {n}",
                self.monomials.len()
            ));
        }
        for f in &self.factors {
            if f.leg == 0 || f.leg > n {
                return domain(format!("kernel factor leg {} outside 1..={n}", f.leg));
            }
            if f.anchor >= f.leg {
                return domain(format!(
                    "kernel factor anchor {} must precede its leg {}",
                    f.anchor, f.leg
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    /// `‖j‖ = n + #{l : j_l = 0}`.
    pub fn weight(&self) -> usize {
        self.n() + self.word.iter().filter(|&&j| j == 0).count()
    }

    /// Scaling exponent: the integral over `[0, cT]` is `c^p` times the one
    /// over `[0, T]`, `p = Σ kernel exponents + Σ α + ‖j‖/2`.
    pub fn scaling_power(&self) -> f64 {
        let ke: f64 = self.factors.iter().map(|f| f.kernel.exponent()).sum();
        let me: f64 = self.monomials.iter().map(|&a| a as f64).sum();
        ke + me + self.weight() as f64 / 2.0
    }

    /// Largest driver index appearing in the word.
    pub fn max_driver(&self) -> usize {
        self.word.iter().copied().max().unwrap_or(0)
    }

    /// Same spec moved to `[start, end]`.
    pub fn on_interval(&self, start: f64, end: f64) -> Result<Self> {
        let mut s = self.clone();
        s.start = start;
        s.end = end;
        s.check()?;
        Ok(s)
    }
}
