//! Piecewise-linear driver paths and the iterated integrals along them.
//!
//! On a period `[s, s+δ]` split into `L` equal segments, driver `j` moves
//! with constant speed `a_l^j/√δ` on segment `l`; the time coordinate
//! `ω⁰_t = t − s` is implicit. Slopes are dimensionless, so the same slope
//! matrix serves every horizon.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::kernel::pow;
use crate::moments::IteratedIntegralSpec;
use crate::quad::{integrate_nested, NestedIntegrand, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    pub start: f64,
    pub delta: f64,
    /// `L × d` slope matrix.
    pub slopes: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    pub fn new(start: f64, delta: f64, slopes: Vec<Vec<f64>>) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0 && start.is_finite()) {
            return domain(format!("path period needs finite start and δ > 0, got ({start}, {delta})"));
        }
        if slopes.is_empty() {
            return domain("path needs at least one segment");
        }
        let d = slopes[0].len();
        if slopes.iter().any(|r| r.len() != d) {
            return domain("ragged slope matrix");
        }
        if slopes.iter().flatten().any(|a| !a.is_finite()) {
            return domain("non-finite slope");
        }
        Ok(PiecewiseLinearPath { start, delta, slopes })
    }

    pub fn segments(&self) -> usize {
        self.slopes.len()
    }

    pub fn d(&self) -> usize {
        self.slopes[0].len()
    }

    pub fn end(&self) -> f64 {
        self.start + self.delta
    }

    pub fn segment_len(&self) -> f64 {
        self.delta / self.segments() as f64
    }

    /// Speed of driver `j ≥ 1` on segment `l`.
    pub fn speed(&self, l: usize, j: usize) -> f64 {
        self.slopes[l][j - 1] / self.delta.sqrt()
    }

    pub fn mirrored(&self) -> Self {
        PiecewiseLinearPath {
            start: self.start,
            delta: self.delta,
            slopes: self.slopes.iter().map(|r| r.iter().map(|a| -a).collect()).collect(),
        }
    }

    pub fn shifted(&self, start: f64) -> Self {
        PiecewiseLinearPath {
            start,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slopes.iter().flatten().all(|&a| a == 0.0)
    }

    /// `ω^j_t − ω^j_s` for `t` in the period (clamped outside it).
    pub fn value(&self, j: usize, t: f64) -> f64 {
        let u = (t - self.start).clamp(0.0, self.delta);
        if j == 0 {
            return u;
        }
        let seg = self.segment_len();
        let mut acc = 0.0;
        for l in 0..self.segments() {
            let lo = l as f64 * seg;
            if u <= lo {
                break;
            }
            acc += self.speed(l, j) * (u - lo).min(seg);
        }
        acc
    }

    /// Total increment of driver `j` over the period.
    pub fn increment(&self, j: usize) -> f64 {
        if j == 0 {
            return self.delta;
        }
        (0..self.segments()).map(|l| self.speed(l, j)).sum::<f64>() * self.segment_len()
    }

    /// CSV: segment index then one slope column per driver.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["segment".to_string()];
        header.extend((1..=self.d()).map(|j| format!("a{j}")));
        w.write_record(&header)?;
        for (l, row) in self.slopes.iter().enumerate() {
            let mut rec = vec![l.to_string()];
            rec.extend(row.iter().map(|a| format!("{a:.17e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Contiguous concatenation of periods, evaluated by the closed
/// piecewise-affine formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenatedPath {
    pieces: Vec<PiecewiseLinearPath>,
    offsets: Vec<Vec<f64>>,
}

impl ConcatenatedPath {
    pub fn new(pieces: Vec<PiecewiseLinearPath>) -> Result<Self> {
        if pieces.is_empty() {
            return domain("empty path concatenation");
        }
        let d = pieces[0].d();
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = vec![0.0; d + 1];
        for (i, p) in pieces.iter().enumerate() {
            if p.d() != d {
                return domain("concatenated periods differ in driver count");
            }
            if i > 0 {
                let prev = pieces[i - 1].end();
                if (p.start - prev).abs() > 1e-12 * prev.abs().max(1.0) {
                    return domain(format!("period {i} starts at {} but the previous one ends at {prev}", p.start));
                }
            }
            offsets.push(acc.clone());
            for (j, a) in acc.iter_mut().enumerate() {
                *a += p.increment(j);
            }
        }
        Ok(ConcatenatedPath { pieces, offsets })
    }

    pub fn single(path: PiecewiseLinearPath) -> Self {
        let d = path.d();
        ConcatenatedPath {
            pieces: vec![path],
            offsets: vec![vec![0.0; d + 1]],
        }
    }

    pub fn pieces(&self) -> &[PiecewiseLinearPath] {
        &self.pieces
    }

    pub fn d(&self) -> usize {
        self.pieces[0].d()
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].start
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end()
    }

    /// `ω^j_t` with `ω_start = 0`; `j = 0` is elapsed time.
    pub fn value(&self, j: usize, t: f64) -> f64 {
        if t <= self.start() {
            return 0.0;
        }
        let idx = self
            .pieces
            .iter()
            .rposition(|p| p.start <= t)
            .unwrap_or(0);
        self.offsets[idx][j] + self.pieces[idx].value(j, t)
    }
}

/// An ordered cell `l_1 ≥ l_2 ≥ ⋯ ≥ l_n` with its deterministic coefficient
/// (the integral of kernels and monomials over the cell).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub segments: Vec<usize>,
    pub coefficient: f64,
}

fn cell_tolerance() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 64,
    }
}

struct CellIntegrand<'a> {
    spec: &'a IteratedIntegralSpec,
    cell: &'a [usize],
    seg: f64,
}

impl NestedIntegrand for CellIntegrand<'_> {
    fn depth(&self) -> usize {
        self.spec.n()
    }

    fn bounds(&self, level: usize, t: &[f64]) -> (f64, f64) {
        let l = self.cell[level - 1];
        let lo = self.spec.start + l as f64 * self.seg;
        let mut hi = lo + self.seg;
        if level > 1 && self.cell[level - 2] == l {
            hi = hi.min(t[level - 1]);
        }
        (lo, hi)
    }

    fn weight(&self, level: usize, t: &[f64]) -> f64 {
        if level == 0 {
            return 1.0;
        }
        let mut w = 1.0;
        for f in self.spec.factors.iter().filter(|f| f.leg == level) {
            w *= f.kernel.value(t[f.anchor], t[level]);
        }
        let a = self.spec.monomials[level - 1];
        if a > 0 {
            w *= pow(t[level] - self.spec.start, a as f64);
        }
        w
    }
}

/// All non-increasing segment sequences of length `n` over `0..segments`.
pub fn ordered_cells(n: usize, segments: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in (0..=max).rev() {
            cur.push(l);
            rec(n, l, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if segments > 0 {
        rec(n, segments - 1, &mut Vec::new(), &mut out);
    }
    out
}

/// Coefficient of one cell.
pub fn cell_coefficient(spec: &IteratedIntegralSpec, segments: usize, cell: &[usize]) -> Result<f64> {
    spec.check()?;
    if cell.len() != spec.n() || cell.iter().any(|&l| l >= segments) || cell.windows(2).any(|w| w[1] > w[0]) {
        return domain(format!("{cell:?} is not an ordered cell of length {} over {segments} segments", spec.n()));
    }
    let integrand = CellIntegrand {
        spec,
        cell,
        seg: (spec.end - spec.start) / segments as f64,
    };
    Ok(integrate_nested(&integrand, spec.end, cell_tolerance()))
}

/// Coefficients of every ordered cell, in the order of [`ordered_cells`].
/// Integer kernel exponents make every level polynomial, where the 15-point
/// rule is exact up to rounding.
pub fn cell_coefficients(spec: &IteratedIntegralSpec, segments: usize) -> Result<Vec<Cell>> {
    spec.check()?;
    ordered_cells(spec.n(), segments)
        .into_par_iter()
        .map(|c| {
            let coefficient = cell_coefficient(spec, segments, &c)?;
            Ok(Cell {
                segments: c,
                coefficient,
            })
        })
        .collect()
}

fn check_interval(spec: &IteratedIntegralSpec, path: &PiecewiseLinearPath) -> Result<()> {
    let tol = 1e-12 * path.end().abs().max(1.0);
    if (spec.start - path.start).abs() > tol || (spec.end - path.end()).abs() > tol {
        return domain(format!(
            "integral over [{}, {}] but path period is [{}, {}]",
            spec.start,
            spec.end,
            path.start,
            path.end()
        ));
    }
    if spec.max_driver() > path.d() {
        return domain(format!("word uses driver {} but the path has {}", spec.max_driver(), path.d()));
    }
    Ok(())
}

/// Sum over cells of coefficient times the product of leg speeds.
pub fn integral_from_cells(spec: &IteratedIntegralSpec, cells: &[Cell], path: &PiecewiseLinearPath) -> f64 {
    let mut total = 0.0;
    for c in cells {
        let mut s = c.coefficient;
        for (m, &l) in c.segments.iter().enumerate() {
            let j = spec.word[m];
            if j != 0 {
                s *= path.speed(l, j);
            }
            if s == 0.0 {
                break;
            }
        }
        total += s;
    }
    total
}

pub fn path_iterated_integral(spec: &IteratedIntegralSpec, path: &PiecewiseLinearPath) -> Result<f64> {
    check_interval(spec, path)?;
    let cells = cell_coefficients(spec, path.segments())?;
    Ok(integral_from_cells(spec, &cells, path))
}

/// `Σ_k λ_k ∫ … dω_k` over explicit weighted paths sharing one period.
pub fn weighted_path_expectation(
    spec: &IteratedIntegralSpec,
    atoms: &[(f64, PiecewiseLinearPath)],
) -> Result<f64> {
    let Some((_, first)) = atoms.first() else {
        return Ok(0.0);
    };
    for (_, p) in atoms {
        check_interval(spec, p)?;
        if p.segments() != first.segments() {
            return domain("paths differ in segment count");
        }
    }
    let cells = cell_coefficients(spec, first.segments())?;
    Ok(atoms
        .iter()
        .map(|(w, p)| w * integral_from_cells(spec, &cells, p))
        .sum())
}
