//! SVIE model descriptions: `X^i_t = x_i + Σ_j ∫ K_i(t,r) V^i_j(X_r) ∘ dB^j_r`
//! with `B^0_t = t`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

pub type CoeffFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar function of the volatility state used by the Heston-type family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UFunc {
    /// `u`
    U,
    /// `cos(u)`
    Cos,
    /// `√max(u, 0)`
    Sqrt,
    /// `a + b·u`
    Affine { a: f64, b: f64 },
}

impl UFunc {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            UFunc::U => u,
            UFunc::Cos => u.cos(),
            UFunc::Sqrt => u.max(0.0).sqrt(),
            UFunc::Affine { a, b } => a + b * u,
        }
    }
}

/// Built-in coefficient families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// 1-D, `V ≡ 1`, no drift.
    Linear,
    /// 1-D, `V(x) = cos(x)`, no drift.
    Cos,
    /// States `(S, U)`: `dS = S b1(U) dt + S σ1(U) ∘ dB¹`,
    /// `U = U0 + ∫K b2(U) dr + ∫K σ2(U) ∘ dB²`.
    Heston {
        b1: UFunc,
        sigma1: UFunc,
        sigma2: UFunc,
        #[serde(default = "default_b2")]
        b2: UFunc,
    },
}

fn default_b2() -> UFunc {
    UFunc::Affine {
        a: 0.5,
        b: -1.0 / 3.0,
    }
}

/// JSON model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub kernels: Vec<Kernel>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub corr: Option<Vec<Vec<f64>>>,
}

#[derive(Clone)]
pub struct SVIEModel {
    d: usize,
    kernels: Vec<Kernel>,
    /// `coeffs[i][j]`, `None` is the zero function.
    coeffs: Vec<Vec<Option<CoeffFn>>>,
    corr: Vec<Vec<f64>>,
    /// Row-major `d × d` factor `A` with `A Aᵀ = corr`.
    corr_factor: Vec<f64>,
    x0: Vec<f64>,
}

impl fmt::Debug for SVIEModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SVIEModel")
            .field("d", &self.d)
            .field("d1", &self.d1())
            .field("kernels", &self.kernels)
            .field("corr", &self.corr)
            .field("x0", &self.x0)
            .finish()
    }
}

impl SVIEModel {
    /// General constructor. `coeffs` is `d1 × (d + 1)`; column 0 is the drift.
    pub fn new(
        kernels: Vec<Kernel>,
        coeffs: Vec<Vec<Option<CoeffFn>>>,
        corr: Vec<Vec<f64>>,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let d1 = kernels.len();
        if d1 == 0 {
            return Err(Error::Model("at least one state is required".into()));
        }
        if x0.len() != d1 || coeffs.len() != d1 {
            return Err(Error::Model(format!(
                "state count mismatch: {} kernels, {} initial values, {} coefficient rows",
                d1,
                x0.len(),
                coeffs.len()
            )));
        }
        let d = corr.len();
        if d == 0 {
            return Err(Error::Model("at least one driver is required".into()));
        }
        if coeffs.iter().any(|row| row.len() != d + 1) {
            return Err(Error::Model(format!(
                "each coefficient row needs {} entries (drift + {} drivers)",
                d + 1,
                d
            )));
        }
        let corr_factor = correlation_factor(&corr)?;
        let model = SVIEModel {
            d,
            kernels,
            coeffs,
            corr,
            corr_factor,
            x0,
        };
        model.probe()?;
        Ok(model)
    }

    pub fn linear_1d(kernel: Kernel, x0: f64) -> Result<Self> {
        let one: CoeffFn = Arc::new(|_| 1.0);
        Self::new(vec![kernel], vec![vec![None, Some(one)]], vec![vec![1.0]], vec![x0])
    }

    pub fn cos_1d(kernel: Kernel, x0: f64) -> Result<Self> {
        let v: CoeffFn = Arc::new(|x| x[0].cos());
        Self::new(vec![kernel], vec![vec![None, Some(v)]], vec![vec![1.0]], vec![x0])
    }

    /// Heston-type model with states `(S, U)` and drivers `(B¹, B²)`.
    #[allow(clippy::too_many_arguments)]
    pub fn heston(
        kernel: Kernel,
        rho: f64,
        s0: f64,
        u0: f64,
        b1: UFunc,
        sigma1: UFunc,
        sigma2: UFunc,
        b2: UFunc,
    ) -> Result<Self> {
        let drift_s: CoeffFn = Arc::new(move |x| x[0] * b1.eval(x[1]));
        let vol_s: CoeffFn = Arc::new(move |x| x[0] * sigma1.eval(x[1]));
        let drift_u: CoeffFn = Arc::new(move |x| b2.eval(x[1]));
        let vol_u: CoeffFn = Arc::new(move |x| sigma2.eval(x[1]));
        Self::new(
            vec![Kernel::One, kernel],
            vec![
                vec![Some(drift_s), Some(vol_s), None],
                vec![Some(drift_u), None, Some(vol_u)],
            ],
            vec![vec![1.0, rho], vec![rho, 1.0]],
            vec![s0, u0],
        )
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match &spec.family {
            Family::Linear | Family::Cos => {
                if spec.kernels.len() != 1 || spec.x0.len() != 1 {
                    return Err(Error::Model(
                        "one-dimensional families take exactly one kernel and one initial value"
                            .into(),
                    ));
                }
                if let Some(c) = &spec.corr {
                    if c != &vec![vec![1.0]] {
                        return Err(Error::Model(
                            "one-dimensional families have a single driver; corr must be [[1]]"
                                .into(),
                        ));
                    }
                }
                if spec.family == Family::Linear {
                    Self::linear_1d(spec.kernels[0], spec.x0[0])
                } else {
                    Self::cos_1d(spec.kernels[0], spec.x0[0])
                }
            }
            Family::Heston {
                b1,
                sigma1,
                sigma2,
                b2,
            } => {
                if spec.kernels.len() != 2 || spec.x0.len() != 2 {
                    return Err(Error::Model(
                        "the Heston family takes kernels [S, U] and x0 [S0, U0]".into(),
                    ));
                }
                if !spec.kernels[0].is_one() {
                    return Err(Error::Model("the price state S must use the constant kernel".into()));
                }
                let rho = match &spec.corr {
                    None => 0.0,
                    Some(c) => {
                        if c.len() != 2 || c.iter().any(|r| r.len() != 2) {
                            return Err(Error::Model("corr must be 2×2 for the Heston family".into()));
                        }
                        c[0][1]
                    }
                };
                let m = Self::heston(
                    spec.kernels[1],
                    rho,
                    spec.x0[0],
                    spec.x0[1],
                    *b1,
                    *sigma1,
                    *sigma2,
                    *b2,
                )?;
                if let Some(c) = &spec.corr {
                    if (c[1][0] - c[0][1]).abs() > 1e-12 {
                        return Err(Error::Model("corr must be symmetric".into()));
                    }
                }
                Ok(m)
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d1(&self) -> usize {
        self.kernels.len()
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn corr(&self) -> &[Vec<f64>] {
        &self.corr
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Row-major factor `A` with `A Aᵀ = corr`.
    pub fn corr_factor(&self) -> &[f64] {
        &self.corr_factor
    }

    /// States with `K ≡ 1` (semimartingale components).
    pub fn semimartingale_states(&self) -> Vec<usize> {
        (0..self.d1()).filter(|&i| self.kernels[i].is_one()).collect()
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        match &self.coeffs[i][j] {
            Some(f) => f(x),
            None => 0.0,
        }
    }

    pub fn has_coeff(&self, i: usize, j: usize) -> bool {
        self.coeffs[i][j].is_some()
    }

    /// Copy with a different initial state.
    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.kernels.clone(), self.coeffs.clone(), self.corr.clone(), x0)
    }

    fn probe(&self) -> Result<()> {
        for i in 0..self.d1() {
            if !self.x0[i].is_finite() {
                return Err(Error::Model(format!("initial value of state {i} is not finite")));
            }
            for j in 0..=self.d {
                let v = self.coeff(i, j, &self.x0);
                if !v.is_finite() {
                    return Err(Error::Model(format!(
                        "coefficient V[{i}][{j}] is not finite at the initial state"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Validates symmetry, unit diagonal and positive semidefiniteness, and
/// returns a square-root factor (Cholesky when definite, eigen otherwise).
fn correlation_factor(corr: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = corr.len();
    if corr.iter().any(|r| r.len() != d) {
        return Err(Error::Model("correlation matrix must be square".into()));
    }
    for i in 0..d {
        if (corr[i][i] - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!("correlation diagonal entry {i} is not 1")));
        }
        for j in 0..i {
            if (corr[i][j] - corr[j][i]).abs() > 1e-12 {
                return Err(Error::Model("correlation matrix is not symmetric".into()));
            }
            if !(corr[i][j].abs() <= 1.0) {
                return Err(Error::Model(format!(
                    "correlation entry ({i},{j}) = {} is outside [-1, 1]",
                    corr[i][j]
                )));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| corr[i][j]);
    if let Some(ch) = m.clone().cholesky() {
        let l = ch.l();
        return Ok((0..d * d).map(|k| l[(k / d, k % d)]).collect());
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().any(|&v| v < -1e-12) {
        return Err(Error::Model("correlation matrix is not positive semidefinite".into()));
    }
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            a[i * d + k] = eig.eigenvectors[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt();
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub state: usize,
    pub kernel: Kernel,
    /// Standing hypothesis: `K ≡ 1` or `H > 1/2`.
    pub standing: bool,
    /// Regularity needed by the order-`N` multi-period construction:
    /// `K ≡ 1` or `H > (N - 1)/2 + 1/2`.
    pub multi_period: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub order: usize,
    pub checks: Vec<KernelCheck>,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn all_satisfied(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Advisory regularity report for an order-`N` construction; never fails.
pub fn validate_hypotheses(model: &SVIEModel, order: usize) -> HypothesisReport {
    let threshold = (order.saturating_sub(1)) as f64 / 2.0 + 0.5;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for (state, kernel) in model.kernels().iter().enumerate() {
        let (standing, multi_period) = match kernel.hurst() {
            None => (true, true),
            Some(h) => (h > 0.5, h > threshold),
        };
        if !multi_period {
            warnings.push(format!(
                "state {state}: H = {} ≤ {} — order-{order} multi-period accuracy is not guaranteed",
                kernel.hurst().unwrap_or(f64::NAN),
                threshold
            ));
        }
        if let Some(h) = kernel.hurst() {
            if h < 1.0 {
                warnings.push(format!(
                    "state {state}: H = {h} < 1 — the kernel derivative is unbounded near the diagonal"
                ));
            }
        }
        checks.push(KernelCheck {
            state,
            kernel: *kernel,
            standing,
            multi_period,
        });
    }
    HypothesisReport {
        order,
        checks,
        warnings,
    }
}
