//! Deterministic Volterra equation along a driver path:
//!
//! `X_{lh}^i = x_i + Σ_j Σ_{α<l} K_i(lh, αh) V^i_j(X_{αh}) (ω^j_{(α+1)h} − ω^j_{(α−1)h})/2`
//!
//! with `ω_{−h} := 0` for every component (time included) and `ω⁰_t = t`.
//! Node values come from the closed piecewise-affine path formula.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::SVIEModel;
use crate::path::ConcatenatedPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveGrid {
    pub steps: usize,
    pub horizon: f64,
}

impl SolveGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return domain("grid needs D ≥ 1 steps");
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return domain(format!("grid horizon must be positive, got {horizon}"));
        }
        Ok(SolveGrid { steps, horizon })
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Warning when grid nodes do not fall on every segment break of a path
    /// with `segments` uniform pieces.
    pub fn alignment_warning(&self, segments: usize) -> Option<String> {
        if segments > 0 && self.steps % segments != 0 {
            Some(format!(
                "D = {} is not a multiple of the {segments} path segments; kinks fall between nodes",
                self.steps
            ))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub terminal: Vec<f64>,
    /// States at every node `0..=D` when requested.
    pub trajectory: Option<Vec<Vec<f64>>>,
}

/// Midpoint driver increments `(ω_{(α+1)h} − ω_{(α−1)h})/2` for
/// `α = 0..D`, laid out `[α][j]` with `j = 0..=d`.
pub fn midpoint_increments(path: &ConcatenatedPath, grid: &SolveGrid) -> Vec<f64> {
    let d = path.d();
    let h = grid.h();
    let start = path.start();
    let nodes: Vec<Vec<f64>> = (0..=grid.steps)
        .map(|a| {
            let t = start + a as f64 * h;
            (0..=d).map(|j| path.value(j, t)).collect()
        })
        .collect();
    let mut inc = vec![0.0; grid.steps * (d + 1)];
    for a in 0..grid.steps {
        for j in 0..=d {
            let prev = if a == 0 { 0.0 } else { nodes[a - 1][j] };
            inc[a * (d + 1) + j] = 0.5 * (nodes[a + 1][j] - prev);
        }
    }
    inc
}

/// Kernel lag values `k_i(m h)` for `m = 0..=D`, laid out `[i][m]`.
pub fn kernel_table(model: &SVIEModel, grid: &SolveGrid) -> Vec<Vec<f64>> {
    let h = grid.h();
    model
        .kernels()
        .iter()
        .map(|k| (0..=grid.steps).map(|m| k.lag(m as f64 * h)).collect())
        .collect()
}

/// Solve with precomputed increments (`[α][j]`) and kernel table.
pub fn solve_with_increments(
    model: &SVIEModel,
    inc: &[f64],
    kern: &[Vec<f64>],
    steps: usize,
    keep_trajectory: bool,
) -> Result<VolterraSolution> {
    let d1 = model.d1();
    let dp = model.d() + 1;
    if inc.len() != steps * dp || kern.len() != d1 {
        return domain("increment or kernel table does not match the model and grid");
    }
    let x0 = model.x0();
    // F[α][i] = Σ_j V^i_j(X_α) · inc[α][j]
    let mut f = vec![0.0; steps * d1];
    let mut x = x0.to_vec();
    let mut traj = keep_trajectory.then(|| vec![x.clone()]);
    for l in 0..steps {
        let row = &inc[l * dp..(l + 1) * dp];
        for i in 0..d1 {
            let mut s = 0.0;
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 && model.has_coeff(i, j) {
                    s += model.coeff(i, j, &x) * w;
                }
            }
            f[l * d1 + i] = s;
        }
        // X at node l+1.
        let n = l + 1;
        for i in 0..d1 {
            let k = &kern[i];
            let mut s = x0[i];
            for a in 0..n {
                s += k[n - a] * f[a * d1 + i];
            }
            if !s.is_finite() {
                return Err(Error::NonFinite { step: n, coord: i });
            }
            x[i] = s;
        }
        if let Some(t) = traj.as_mut() {
            t.push(x.clone());
        }
    }
    Ok(VolterraSolution {
        terminal: x,
        trajectory: traj,
    })
}

/// Solve the Volterra equation along `path` on the grid; the path must span
/// `[0, T]` exactly.
pub fn solve_along_path(
    model: &SVIEModel,
    path: &ConcatenatedPath,
    grid: &SolveGrid,
    keep_trajectory: bool,
) -> Result<VolterraSolution> {
    if path.d() != model.d() {
        return domain(format!("path has {} drivers, model expects {}", path.d(), model.d()));
    }
    let span = path.end() - path.start();
    if (span - grid.horizon).abs() > 1e-9 * grid.horizon {
        return domain(format!("path spans {span} but the grid horizon is {}", grid.horizon));
    }
    let inc = midpoint_increments(path, grid);
    let kern = kernel_table(model, grid);
    solve_with_increments(model, &inc, &kern, grid.steps, keep_trajectory)
}

/// Trajectory CSV: `t, x1, …, x_{d1}`.
pub fn write_trajectory_csv<W: Write>(traj: &[Vec<f64>], grid: &SolveGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d1 = traj.first().map_or(0, |r| r.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d1).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (a, row) in traj.iter().enumerate() {
        let mut rec = vec![format!("{:.17e}", a as f64 * grid.h())];
        rec.extend(row.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
