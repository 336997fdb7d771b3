//! Moment systems: the iterated integrals a cubature measure must integrate
//! exactly, with their Wiener expectations as targets.

use serde::{Deserialize, Serialize};

use super::expectation::combined_expectation;
use super::spec::{IteratedIntegralSpec, KernelFactor};
use crate::error::Result;
use crate::kernel::Kernel;

/// Σ coef·∫spec = target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCondition {
    pub label: String,
    pub terms: Vec<(f64, IteratedIntegralSpec)>,
    pub target: f64,
}

impl MomentCondition {
    /// Normaliser for relative residuals: `|target|`, or the natural unit
    /// `(end − start)^p` of the condition when the target is zero.
    pub fn scale(&self) -> f64 {
        if self.target != 0.0 {
            return self.target.abs();
        }
        match self.terms.first() {
            Some((_, s)) => (s.end - s.start).powf(s.scaling_power()),
            None => 1.0,
        }
    }
}

/// Path ansatz: `W` paths (plus mirrors), `L` segments, `d` drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLayout {
    pub w: usize,
    pub l: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSystem {
    pub name: String,
    pub d: usize,
    pub start: f64,
    pub end: f64,
    pub corr: Vec<Vec<f64>>,
    pub conditions: Vec<MomentCondition>,
    /// `Σ_{k≤W} λ_k = weight_sum` counted as an equation of the system.
    pub weight_sum: Option<f64>,
    pub layout: PathLayout,
}

impl MomentSystem {
    pub fn equation_count(&self) -> usize {
        self.conditions.len() + usize::from(self.weight_sum.is_some())
    }

    /// Unknowns when weights are free: `W` weights and `W·L·d` slopes.
    pub fn unknown_count(&self) -> usize {
        self.layout.w * (1 + self.layout.l * self.layout.d)
    }

    pub fn horizon(&self) -> f64 {
        self.end - self.start
    }
}

fn condition(label: impl Into<String>, terms: Vec<(f64, IteratedIntegralSpec)>, corr: &[Vec<f64>]) -> Result<MomentCondition> {
    let target = combined_expectation(&terms, corr)?.value;
    Ok(MomentCondition {
        label: label.into(),
        terms,
        target,
    })
}

fn one_d_corr() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}

fn two_d_corr(rho: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0, rho], vec![rho, 1.0]]
}

/// Anchor sets grouped by the common coefficient they multiply in the
/// order-5 one-dimensional expansion (`𝒦(κ)` with `κ_1 = 0`).
pub const QUARTIC_ANCHOR_GROUPS: [&[[usize; 4]]; 7] = [
    &[[0, 0, 0, 0]],
    &[
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 2],
        [0, 0, 2, 0],
        [0, 0, 0, 3],
    ],
    &[[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0], [0, 0, 2, 2]],
    &[
        [0, 0, 1, 2],
        [0, 0, 2, 1],
        [0, 0, 1, 3],
        [0, 0, 2, 3],
        [0, 1, 0, 2],
        [0, 1, 2, 0],
        [0, 1, 0, 3],
    ],
    &[[0, 1, 1, 1]],
    &[[0, 1, 1, 2], [0, 1, 2, 1], [0, 1, 2, 2], [0, 1, 1, 3]],
    &[[0, 1, 2, 3]],
];

/// 1-D, order 3, one period on `[0, T]`: `𝒦(0,0)` and `𝒦(0,1)` over `dB dB`.
pub fn moment_targets_1d_n3_oneperiod(h: f64, t: f64) -> Result<MomentSystem> {
    let k = Kernel::power(h)?;
    let corr = one_d_corr();
    let conditions = vec![
        condition("K(0,0) dB dB", vec![(1.0, IteratedIntegralSpec::kernel_chain(k, &[0, 0], vec![1, 1], 0.0, t)?)], &corr)?,
        condition("K(0,1) dB dB", vec![(1.0, IteratedIntegralSpec::kernel_chain(k, &[0, 1], vec![1, 1], 0.0, t)?)], &corr)?,
    ];
    Ok(MomentSystem {
        name: "1d-n3-oneperiod".into(),
        d: 1,
        start: 0.0,
        end: t,
        corr,
        conditions,
        weight_sum: None,
        layout: PathLayout { w: 1, l: 2, d: 1 },
    })
}

/// 1-D, order 5, one period: weight sum, two quadratic and seven grouped
/// quartic conditions (10 equations, 10 unknowns with `W = 2`, `L = 4`).
pub fn moment_targets_1d_n5_oneperiod(h: f64, t: f64) -> Result<MomentSystem> {
    let k = Kernel::power(h)?;
    let corr = one_d_corr();
    let mut conditions = vec![
        condition("K(0,0) dB dB", vec![(1.0, IteratedIntegralSpec::kernel_chain(k, &[0, 0], vec![1, 1], 0.0, t)?)], &corr)?,
        condition("K(0,1) dB dB", vec![(1.0, IteratedIntegralSpec::kernel_chain(k, &[0, 1], vec![1, 1], 0.0, t)?)], &corr)?,
    ];
    for (g, group) in QUARTIC_ANCHOR_GROUPS.iter().enumerate() {
        let terms = group
            .iter()
            .map(|a| Ok((1.0, IteratedIntegralSpec::kernel_chain(k, a, vec![1, 1, 1, 1], 0.0, t)?)))
            .collect::<Result<Vec<_>>>()?;
        conditions.push(condition(format!("quartic group {}", g + 1), terms, &corr)?);
    }
    Ok(MomentSystem {
        name: "1d-n5-oneperiod".into(),
        d: 1,
        start: 0.0,
        end: t,
        corr,
        conditions,
        weight_sum: Some(0.5),
        layout: PathLayout { w: 2, l: 4, d: 1 },
    })
}

/// 1-D, order 3, one period `[0, δ]` of a multi-period scheme.
pub fn moment_targets_1d_n3_multi(delta: f64) -> Result<MomentSystem> {
    let corr = one_d_corr();
    let conditions = vec![condition(
        "dB dB",
        vec![(1.0, IteratedIntegralSpec::word(vec![1, 1], 0.0, delta)?)],
        &corr,
    )?];
    Ok(MomentSystem {
        name: "1d-n3-multi".into(),
        d: 1,
        start: 0.0,
        end: delta,
        corr,
        conditions,
        weight_sum: None,
        layout: PathLayout { w: 1, l: 1, d: 1 },
    })
}

/// 1-D, order 5, one period `[0, δ]`; the two first-order monomial
/// conditions are merged into their sum.
pub fn moment_targets_1d_n5_multi(delta: f64) -> Result<MomentSystem> {
    let corr = one_d_corr();
    let pair = IteratedIntegralSpec::word(vec![1, 1], 0.0, delta)?;
    let conditions = vec![
        condition("dB dB", vec![(1.0, pair.clone())], &corr)?,
        condition(
            "[(t1-Tm)+(t2-Tm)] dB dB",
            vec![
                (1.0, pair.clone().with_monomials(vec![1, 0])?),
                (1.0, pair.with_monomials(vec![0, 1])?),
            ],
            &corr,
        )?,
        condition(
            "dB dB dB dB",
            vec![(1.0, IteratedIntegralSpec::word(vec![1, 1, 1, 1], 0.0, delta)?)],
            &corr,
        )?,
    ];
    Ok(MomentSystem {
        name: "1d-n5-multi".into(),
        d: 1,
        start: 0.0,
        end: delta,
        corr,
        conditions,
        weight_sum: Some(0.5),
        layout: PathLayout { w: 2, l: 1, d: 1 },
    })
}

/// 2-D correlated, order 3, one period `[0, δ]`.
pub fn moment_targets_2d_n3_multi(delta: f64, rho: f64) -> Result<MomentSystem> {
    let corr = two_d_corr(rho);
    let mut conditions = Vec::new();
    for w in [[1, 1], [2, 2], [1, 2], [2, 1]] {
        conditions.push(condition(
            format!("dB{} dB{}", w[0], w[1]),
            vec![(1.0, IteratedIntegralSpec::word(w.to_vec(), 0.0, delta)?)],
            &corr,
        )?);
    }
    Ok(MomentSystem {
        name: "2d-n3-multi".into(),
        d: 2,
        start: 0.0,
        end: delta,
        corr,
        conditions,
        weight_sum: None,
        layout: PathLayout { w: 2, l: 1, d: 2 },
    })
}

/// 2-D order-5 one-period system for the Heston-type model (`K_1 ≡ 1` for
/// the price, `K_2` power law for the volatility). With `homogeneous` the
/// two time-dependence conditions are dropped (45 equations with the
/// weight constraint; 47 otherwise).
pub fn moment_targets_2d_n5_oneperiod(h: f64, t: f64, rho: f64, homogeneous: bool) -> Result<MomentSystem> {
    let kernel_of = |i: usize| -> Result<Kernel> {
        if i == 1 {
            Ok(Kernel::One)
        } else {
            Kernel::power(h)
        }
    };
    let corr = two_d_corr(rho);
    let f = |i: usize, anchor: usize, leg: usize| -> Result<KernelFactor> {
        Ok(KernelFactor {
            kernel: kernel_of(i)?,
            anchor,
            leg,
        })
    };
    let spec = |word: Vec<usize>, factors: Vec<KernelFactor>| -> Result<IteratedIntegralSpec> {
        let n = word.len();
        IteratedIntegralSpec::new(word, factors, vec![0; n], 0.0, t)
    };
    let mut conditions = Vec::new();

    // ∫ K_i(t1,t2) ∘dB^i_{t2} ∘dB^1_{t1}
    for i in 1..=2 {
        conditions.push(condition(
            format!("pair (1,{i})"),
            vec![(1.0, spec(vec![1, i], vec![f(i, 1, 2)?])?)],
            &corr,
        )?);
    }
    // ∫ K_i(t1,t2) K_j(t_k,t3) ∘dB^j_{t3} ∘dB^i_{t2} dt1
    for (i, j, k) in [(1, 1, 1), (1, 2, 1), (1, 2, 2), (2, 1, 1), (2, 2, 1), (2, 2, 2)] {
        conditions.push(condition(
            format!("drift ({i},{j},{k})"),
            vec![(1.0, spec(vec![0, i, j], vec![f(i, 1, 2)?, f(j, k, 3)?])?)],
            &corr,
        )?);
    }
    if !homogeneous {
        // ∫ K_i(t1,t3) ∘dB^i_{t3} dt2 ∘dB^1_{t1}
        for i in 1..=2 {
            conditions.push(condition(
                format!("time ({i})"),
                vec![(1.0, spec(vec![1, 0, i], vec![f(i, 1, 3)?])?)],
                &corr,
            )?);
        }
    }
    let triples = [(1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2), (2, 1, 1), (2, 2, 1)];
    // ∫ K_{i1}(t1,t2) K_{i2}(t_k,t3) ∘dB^{i2}_{t3} dt2 ∘dB^1_{t1}
    for (i1, i2, k) in triples {
        conditions.push(condition(
            format!("inner-noise ({i1},{i2},{k})"),
            vec![(1.0, spec(vec![1, 0, i2], vec![f(i1, 1, 2)?, f(i2, k, 3)?])?)],
            &corr,
        )?);
    }
    // ∫ K_{i1}(t1,t2) K_{i2}(t_k,t3) dt3 ∘dB^{i1}_{t2} ∘dB^1_{t1}
    for (i1, i2, k) in [(1, 1, 1), (1, 2, 1), (1, 2, 2), (2, 1, 1), (2, 2, 1), (2, 2, 2)] {
        conditions.push(condition(
            format!("inner-drift ({i1},{i2},{k})"),
            vec![(1.0, spec(vec![1, i1, 0], vec![f(i1, 1, 2)?, f(i2, k, 3)?])?)],
            &corr,
        )?);
    }
    // ∫ K_{i1}(t1,t2) K_{i2}(t_{k2},t3) K_{i3}(t_{k3},t4) ∘dB^{i3} ∘dB^{i2} ∘dB^{i1} ∘dB^1
    for (i1, i2, i3, k2, k3) in QUARTIC_2D_TUPLES {
        conditions.push(condition(
            format!("quartic ({i1},{i2},{i3},{k2},{k3})"),
            vec![(
                1.0,
                spec(vec![1, i1, i2, i3], vec![f(i1, 1, 2)?, f(i2, k2, 3)?, f(i3, k3, 4)?])?,
            )],
            &corr,
        )?);
    }
    Ok(MomentSystem {
        name: if homogeneous {
            "2d-n5-oneperiod-homogeneous".into()
        } else {
            "2d-n5-oneperiod".into()
        },
        d: 2,
        start: 0.0,
        end: t,
        corr,
        conditions,
        weight_sum: Some(0.5),
        layout: PathLayout { w: 5, l: 4, d: 2 },
    })
}

/// `(i1, i2, i3, κ2, κ3)` index tuples of the quartic 2-D conditions.
pub const QUARTIC_2D_TUPLES: [(usize, usize, usize, usize, usize); 24] = [
    (1, 1, 1, 1, 1),
    (1, 1, 1, 1, 2),
    (1, 1, 1, 1, 3),
    (1, 1, 1, 2, 1),
    (1, 1, 1, 2, 2),
    (1, 1, 1, 2, 3),
    (1, 1, 2, 1, 1),
    (1, 1, 2, 1, 2),
    (1, 1, 2, 1, 3),
    (1, 2, 1, 1, 1),
    (1, 2, 1, 2, 1),
    (1, 2, 2, 1, 1),
    (1, 2, 2, 1, 2),
    (1, 2, 2, 2, 1),
    (1, 2, 2, 2, 2),
    (2, 1, 1, 1, 1),
    (2, 1, 1, 1, 2),
    (2, 1, 1, 1, 3),
    (2, 1, 2, 1, 1),
    (2, 1, 2, 1, 2),
    (2, 1, 2, 1, 3),
    (2, 2, 1, 1, 1),
    (2, 2, 1, 2, 1),
    (2, 2, 2, 1, 1),
];
