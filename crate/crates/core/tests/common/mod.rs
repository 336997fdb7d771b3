//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use svie_cubature::moments::IteratedIntegralSpec;
use svie_cubature::path::PiecewiseLinearPath;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` by composite Gauss–Legendre with `pieces` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, gl: &[(f64, f64)]) -> f64 {
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        for &(x, w) in gl {
            s += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    s
}

fn kernel_lag(e: f64, u: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if u <= 0.0 {
        0.0
    } else {
        u.powf(e)
    }
}

/// Iterated integral along a piecewise-linear path by brute-force nested
/// quadrature: every level is split at the segment breaks and integrated
/// with `points`-point Gauss–Legendre on each piece.
pub fn path_integral_oracle(spec: &IteratedIntegralSpec, path: &PiecewiseLinearPath, points: usize) -> f64 {
    let gl = gauss_legendre(points);
    let mut t = vec![0.0; spec.n() + 1];
    t[0] = spec.end;
    nested(spec, path, &gl, 1, &mut t)
}

fn nested(spec: &IteratedIntegralSpec, path: &PiecewiseLinearPath, gl: &[(f64, f64)], level: usize, t: &mut Vec<f64>) -> f64 {
    if level > spec.n() {
        return 1.0;
    }
    let lo = spec.start;
    let hi = t[level - 1];
    let seg = path.segment_len();
    let mut breaks = vec![lo];
    let mut b = lo + seg;
    while b < hi - 1e-14 {
        breaks.push(b);
        b += seg;
    }
    breaks.push(hi);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, c) = (w[0], w[1]);
        if c <= a {
            continue;
        }
        let l = (((a + c) / 2.0 - path.start) / seg).floor() as usize;
        let j = spec.word[level - 1];
        let speed = if j == 0 { 1.0 } else { path.speed(l.min(path.segments() - 1), j) };
        for &(x, wt) in gl {
            let u = a + 0.5 * (c - a) * (x + 1.0);
            t[level] = u;
            let mut f = speed;
            for k in spec.factors.iter().filter(|k| k.leg == level) {
                f *= kernel_lag(k.kernel.exponent(), t[k.anchor] - u);
            }
            let m = spec.monomials[level - 1];
            if m > 0 {
                f *= (u - spec.start).powi(m as i32);
            }
            if f != 0.0 {
                f *= nested(spec, path, gl, level + 1, t);
            }
            total += 0.5 * (c - a) * wt * f;
        }
    }
    total
}

/// Standard normal CDF via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Relative difference with an absolute floor for zero references.
pub fn rel_err(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}
