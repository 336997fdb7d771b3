//! Closed-form cubature measures.

use std::f64::consts::PI;

use super::measure::{CubatureMeasure, PeriodMeasure};
use crate::error::{domain, Error, Result};
use crate::kernel::Kernel;
use crate::moments::IteratedIntegralSpec;
use crate::path::cell_coefficient;

fn single(delta: f64, period: PeriodMeasure) -> Result<CubatureMeasure> {
    if !(delta.is_finite() && delta > 0.0) {
        return domain(format!("period length must be positive, got {delta}"));
    }
    CubatureMeasure::new(delta, vec![period])
}

/// Order 3, one driver: slope ±1, weight 1/2 each.
pub fn build_1d_multi_n3(delta: f64) -> Result<CubatureMeasure> {
    single(delta, PeriodMeasure::new(vec![0.5], vec![vec![vec![1.0]]], true)?)
}

/// Order 5, one driver. `None` gives the three-path measure
/// `λ = (1/6, 2/3, 1/6)`, `a = (√3, 0, −√3)`; `Some(λ₁)` the symmetric
/// two-parameter family with `λ₂ = 1/2 − λ₁`,
/// `a₁² = 1 + √(2λ₂/λ₁)`, `a₂² = 1 − √(2λ₁/λ₂)`.
pub fn build_1d_multi_n5(delta: f64, lambda1: Option<f64>) -> Result<CubatureMeasure> {
    match lambda1 {
        None => {
            let r3 = 3f64.sqrt();
            single(
                delta,
                PeriodMeasure::new(
                    vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                    vec![vec![vec![r3]], vec![vec![0.0]], vec![vec![-r3]]],
                    false,
                )?,
            )
        }
        Some(l1) => {
            if !(l1 > 0.0 && l1 <= 1.0 / 6.0) {
                return domain(format!("order-5 family requires 0 < λ₁ ≤ 1/6, got {l1}"));
            }
            let l2 = 0.5 - l1;
            let a1 = (1.0 + (2.0 * l2 / l1).sqrt()).sqrt();
            let a2 = (1.0 - (2.0 * l1 / l2).sqrt()).max(0.0).sqrt();
            single(
                delta,
                PeriodMeasure::new(vec![l1, l2], vec![vec![vec![a1]], vec![vec![a2]]], true)?,
            )
        }
    }
}

/// Cell coefficients `(c₁, c₂, c₃)` of `∫K(T,t₁)K(t₁,t₂)dω_{t₂}dω_{t₁}` on
/// two segments of `[0, 1]`, multiplying `a₁²`, `a₁a₂`, `a₂²`.
pub fn oneperiod_n3_cells(h: f64) -> Result<[f64; 3]> {
    let k = Kernel::power(h)?;
    let spec = IteratedIntegralSpec::kernel_chain(k, &[0, 1], vec![1, 1], 0.0, 1.0)?;
    Ok([
        cell_coefficient(&spec, 2, &[0, 0])?,
        cell_coefficient(&spec, 2, &[1, 0])?,
        cell_coefficient(&spec, 2, &[1, 1])?,
    ])
}

/// Order 3, one period on `[0, T]` for a power-law kernel: `W = 1`, `L = 2`.
pub fn build_1d_oneperiod_n3(h: f64, t: f64) -> Result<CubatureMeasure> {
    let [c1, c2, c3] = oneperiod_n3_cells(h)?;
    let disc = c2 * c2 - 4.0 * c1 * c3;
    if disc < 0.0 {
        return Err(Error::Construction(format!(
            "no real slope ratio for H = {h}: c₂² − 4c₁c₃ = {disc:.3e}"
        )));
    }
    let c4 = (-c2 + disc.sqrt()) / (2.0 * c3);
    let hp = h + 0.5;
    let p = 2f64.powf(hp);
    let a1 = hp * p / ((2.0 * h).sqrt() * (p + c4 - 1.0));
    let a2 = c4 * a1;
    single(t, PeriodMeasure::new(vec![0.5], vec![vec![vec![a1], vec![a2]]], true)?)
}

/// Order 3, two drivers with correlation `ρ`: `W = 2`, `L = 1`, `λ = 1/4`.
/// `θ₂ = θ₁ − arccos ρ`; `θ₁` defaults to `π/6`.
pub fn build_2d_multi_n3(delta: f64, rho: f64, theta1: Option<f64>) -> Result<CubatureMeasure> {
    if !(rho.abs() <= 1.0) {
        return domain(format!("correlation must lie in [−1, 1], got {rho}"));
    }
    let t1 = theta1.unwrap_or(PI / 6.0);
    let t2 = t1 - rho.acos();
    let s = 2f64.sqrt();
    single(
        delta,
        PeriodMeasure::new(
            vec![0.25, 0.25],
            vec![
                vec![vec![s * t1.sin(), s * t2.sin()]],
                vec![vec![s * t1.cos(), s * t2.cos()]],
            ],
            true,
        )?,
    )
}

/// Printed two-path, four-segment measure for the order-5 one-period
/// one-driver system (`H = 3/2`).
pub fn printed_1d_n5_oneperiod(t: f64) -> Result<CubatureMeasure> {
    single(
        t,
        PeriodMeasure::new(
            vec![0.15332891, 0.34667109],
            vec![
                vec![vec![-3.04533315], vec![0.71729258], vec![-0.60085202], vec![0.12029985]],
                vec![vec![1.57981296], vec![-2.08974376], vec![2.33258457], vec![-4.5060389]],
            ],
            true,
        )?,
    )
}

/// Printed weights of the five-path solution of the 2-D order-5 system.
pub const PRINTED_2D_N5_WEIGHTS: [f64; 5] = [
    0.0247245002,
    0.0561159547,
    0.417734596,
    0.00142494883,
    4.44061201e-17,
];
