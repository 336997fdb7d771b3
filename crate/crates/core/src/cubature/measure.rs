//! Discrete measures on piecewise-linear paths, per period and composed.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::moments::IteratedIntegralSpec;
use crate::path::{weighted_path_expectation, ConcatenatedPath, PiecewiseLinearPath};

/// One period's paths. With `symmetric`, each listed path also carries an
/// implicit mirror `−ω` of equal weight (a zero path is its own mirror and
/// becomes one atom of doubled weight); otherwise the list is explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMeasure {
    pub weights: Vec<f64>,
    /// `W × L × d` slope tensor.
    pub slopes: Vec<Vec<Vec<f64>>>,
    pub symmetric: bool,
}

const WEIGHT_SUM_TOL: f64 = 1e-6;

impl PeriodMeasure {
    pub fn new(weights: Vec<f64>, slopes: Vec<Vec<Vec<f64>>>, symmetric: bool) -> Result<Self> {
        let m = PeriodMeasure {
            weights,
            slopes,
            symmetric,
        };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.slopes.len() {
            return domain(format!(
                "{} weights for {} paths",
                self.weights.len(),
                self.slopes.len()
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return domain("weights must be finite and non-negative");
        }
        let l = self.segments();
        let d = self.d();
        if l == 0 || d == 0 {
            return domain("paths need at least one segment and one driver");
        }
        for p in &self.slopes {
            if p.len() != l || p.iter().any(|r| r.len() != d) {
                return domain("paths differ in segment or driver count");
            }
            if p.iter().flatten().any(|a| !a.is_finite()) {
                return domain("non-finite slope");
            }
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return domain(format!("atom weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    pub fn w(&self) -> usize {
        self.weights.len()
    }

    pub fn segments(&self) -> usize {
        self.slopes.first().map_or(0, |p| p.len())
    }

    pub fn d(&self) -> usize {
        self.slopes
            .first()
            .and_then(|p| p.first())
            .map_or(0, |r| r.len())
    }

    pub fn total_weight(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        if self.symmetric {
            2.0 * s
        } else {
            s
        }
    }

    /// Explicit atoms: listed paths first, then their mirrors in the same
    /// order (zero paths merged).
    pub fn atoms(&self) -> Vec<(f64, Vec<Vec<f64>>)> {
        let is_zero = |p: &Vec<Vec<f64>>| p.iter().flatten().all(|&a| a == 0.0);
        let mut out = Vec::with_capacity(2 * self.w());
        for (w, p) in self.weights.iter().zip(&self.slopes) {
            let wt = if self.symmetric && is_zero(p) { 2.0 * w } else { *w };
            out.push((wt, p.clone()));
        }
        if self.symmetric {
            for (w, p) in self.weights.iter().zip(&self.slopes) {
                if !is_zero(p) {
                    out.push((*w, p.iter().map(|r| r.iter().map(|a| -a).collect()).collect()));
                }
            }
        }
        out
    }

    /// Largest absolute slope.
    pub fn max_slope(&self) -> f64 {
        self.slopes
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m: f64, a| m.max(a.abs()))
    }
}

/// `Q_0 ⊗ ⋯ ⊗ Q_{M−1}` on `[0, M·δ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubatureMeasure {
    pub period_len: f64,
    pub periods: Vec<PeriodMeasure>,
}

/// One composed atom: product weight and the concatenated path.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub path: ConcatenatedPath,
}

impl CubatureMeasure {
    pub fn new(period_len: f64, periods: Vec<PeriodMeasure>) -> Result<Self> {
        if !(period_len.is_finite() && period_len > 0.0) {
            return domain(format!("period length must be positive, got {period_len}"));
        }
        if periods.is_empty() {
            return domain("measure needs at least one period");
        }
        let d = periods[0].d();
        for p in &periods {
            p.check()?;
            if p.d() != d {
                return domain("periods differ in driver count");
            }
        }
        Ok(CubatureMeasure { period_len, periods })
    }

    /// The same period measure repeated `m` times over `[0, horizon]`.
    pub fn repeated(period: PeriodMeasure, horizon: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return domain("period count M must be at least 1");
        }
        Self::new(horizon / m as f64, vec![period; m])
    }

    /// Concatenate measures with a common period length.
    pub fn compose(parts: Vec<CubatureMeasure>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return domain("nothing to compose");
        };
        let delta = first.period_len;
        let mut periods = Vec::new();
        for p in parts {
            if (p.period_len - delta).abs() > 1e-12 * delta {
                return domain("composed periods must share one length");
            }
            periods.extend(p.periods);
        }
        Self::new(delta, periods)
    }

    pub fn m(&self) -> usize {
        self.periods.len()
    }

    pub fn d(&self) -> usize {
        self.periods[0].d()
    }

    pub fn horizon(&self) -> f64 {
        self.period_len * self.m() as f64
    }

    /// Segment counts per period.
    pub fn segments(&self) -> Vec<usize> {
        self.periods.iter().map(|p| p.segments()).collect()
    }

    fn period_atoms(&self) -> Vec<Vec<(f64, Vec<Vec<f64>>)>> {
        self.periods.iter().map(|p| p.atoms()).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.periods.iter().map(|p| p.atoms().len()).product()
    }

    /// Atoms in mixed-radix order (last period fastest), generated lazily.
    pub fn enumerate_atoms(&self) -> AtomIter {
        let per = self.period_atoms();
        let total = per.iter().map(|a| a.len()).product();
        AtomIter {
            per,
            delta: self.period_len,
            next: 0,
            total,
        }
    }

    /// Atom with a given index in [`Self::enumerate_atoms`] order.
    pub fn atom(&self, index: usize) -> Result<Atom> {
        let per = self.period_atoms();
        let total: usize = per.iter().map(|a| a.len()).product();
        if index >= total {
            return domain(format!("atom index {index} out of range ({total} atoms)"));
        }
        Ok(build_atom(&per, self.period_len, index))
    }

    /// `E^Q` of an iterated integral over one period `p`.
    pub fn period_expectation(&self, p: usize, spec: &IteratedIntegralSpec) -> Result<f64> {
        let Some(period) = self.periods.get(p) else {
            return domain(format!("period {p} out of range"));
        };
        let start = p as f64 * self.period_len;
        let atoms = period
            .atoms()
            .into_iter()
            .map(|(w, s)| Ok((w, PiecewiseLinearPath::new(start, self.period_len, s)?)))
            .collect::<Result<Vec<_>>>()?;
        weighted_path_expectation(spec, &atoms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CubatureMeasure = serde_json::from_str(s)?;
        Self::new(m.period_len, m.periods)
    }
}

fn build_atom(per: &[Vec<(f64, Vec<Vec<f64>>)>], delta: f64, mut index: usize) -> Atom {
    let mut choice = vec![0; per.len()];
    for (p, atoms) in per.iter().enumerate().rev() {
        choice[p] = index % atoms.len();
        index /= atoms.len();
    }
    let mut weight = 1.0;
    let mut pieces = Vec::with_capacity(per.len());
    for (p, &c) in choice.iter().enumerate() {
        let (w, slopes) = &per[p][c];
        weight *= w;
        pieces.push(PiecewiseLinearPath {
            start: p as f64 * delta,
            delta,
            slopes: slopes.clone(),
        });
    }
    let path = ConcatenatedPath::new(pieces).expect("periods are contiguous by construction");
    Atom { weight, path }
}

pub struct AtomIter {
    per: Vec<Vec<(f64, Vec<Vec<f64>>)>>,
    delta: f64,
    next: usize,
    total: usize,
}

impl Iterator for AtomIter {
    type Item = Atom;

    fn next(&mut self) -> Option<Atom> {
        if self.next >= self.total {
            return None;
        }
        let a = build_atom(&self.per, self.delta, self.next);
        self.next += 1;
        Some(a)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.total - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for AtomIter {}
