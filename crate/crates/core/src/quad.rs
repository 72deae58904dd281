//! Adaptive Gauss-Kronrod quadrature on finite intervals and on the half line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-8, abs_tol: 1e-14, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::numeric(
            format!("non-finite integrand on [{a:e}, {b:e}]"),
            f64::NAN,
        ));
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    integrate_pieces(f, a, b, 1, opts)
}

/// As [`integrate`], starting from `pieces` equal panels so that features
/// narrower than the interval are not stepped over.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, opts: &QuadOptions) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("finite interval required"));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let q = integrate_pieces(f, b, a, pieces, opts)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for k in 0..pieces {
        let hi = if k + 1 == pieces { b } else { a + h * (k + 1) as f64 };
        let seg = kronrod15(&f, a + h * k as f64, hi)?;
        total += seg.value;
        err += seg.error;
        heap.push(seg);
    }
    let mut evaluations = 15 * pieces;
    // Error that can no longer be reduced because the segment hit machine resolution.
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::numeric("quadrature did not converge", err));
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            frozen_err += seg.error;
            frozen_val += seg.value;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod15(&f, seg.a, mid)?;
        let right = kronrod15(&f, mid, seg.b)?;
        evaluations += 30;
        total += left.value + right.value - seg.value;
        err += left.error + right.error - seg.error;
        heap.push(left);
        heap.push(right);
        if err <= frozen_err {
            break;
        }
    }
    // Re-sum to shed cancellation accumulated by the running updates.
    let value = heap.iter().map(|s| s.value).sum::<f64>() + frozen_val;
    let error = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
    Ok(Quadrature { value, error, evaluations })
}

/// Integrates `f` over `[0, inf)` through `u = exp(t / (1 - t^2))`, `t` in `(-1, 1)`.
///
/// Integrands with power-law behaviour at both ends become smooth and rapidly
/// decaying in `t`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, opts: &QuadOptions) -> Result<Quadrature> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let s = t / d;
        if !(-740.0..=709.0).contains(&s) {
            return 0.0;
        }
        let u = s.exp();
        if u == 0.0 {
            return 0.0;
        }
        let v = f(u) * u * (1.0 + t * t) / (d * d);
        if v.is_finite() || s.abs() < 60.0 {
            v
        } else {
            0.0
        }
    };
    let q = integrate_pieces(g, -1.0, 1.0, 32, opts)?;
    // Mass left at the cut-offs means the integral does not converge.
    let edge = |s: f64| {
        let u = s.exp();
        let v = (f(u) * u).abs();
        if v.is_finite() { v } else { 0.0 }
    };
    let tail = edge(-700.0).max(edge(700.0));
    if tail > opts.abs_tol.max(opts.rel_tol * q.value.abs()) {
        return Err(Error::numeric("integral does not decay at the ends of the half line", tail));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((q.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let opts = QuadOptions::default();
        let a = integrate(f64::sin, 0.0, 1.0, &opts).unwrap().value;
        let b = integrate(f64::sin, 1.0, 0.0, &opts).unwrap().value;
        assert_eq!(a, -b);
    }

    #[test]
    fn gamma_integrals_on_half_line() {
        let opts = QuadOptions::default();
        for &x in &[0.5, 2.0 / 3.0, 1.0, 1.5, 3.0] {
            let q = integrate_half_line(|u| u.powf(x - 1.0) * (-u).exp(), &opts).unwrap();
            let exact = libm::tgamma(x);
            assert!((q.value - exact).abs() < 1e-8 * exact, "x={x} got {}", q.value);
        }
    }

    #[test]
    fn beta_kernel_with_slow_tail() {
        // int t^{x-1} / (1+t)^{x+y} dt = B(x, y)
        let opts = QuadOptions::default();
        for &(x, y) in &[(0.5, 0.5), (2.0 / 3.0, 1.0 / 3.0), (0.4, 0.6)] {
            let q = integrate_half_line(|t| t.powf(x - 1.0) / (1.0 + t).powf(x + y), &opts).unwrap();
            let exact = libm::tgamma(x) * libm::tgamma(y) / libm::tgamma(x + y);
            assert!((q.value - exact).abs() < 1e-8 * exact, "({x},{y}) got {}", q.value);
        }
    }

    #[test]
    fn agrees_with_fixed_grid_trapezoid() {
        let f = |u: f64| (-u).exp() * (1.0 + u).ln();
        let q = integrate(f, 0.0, 40.0, &QuadOptions::default()).unwrap().value;
        let t = trapezoid(f, 0.0, 40.0, 400_000);
        assert!((q - t).abs() < 1e-6 * q.abs());
        let h = integrate_half_line(f, &QuadOptions::default()).unwrap().value;
        assert!((h - q).abs() < 1e-6 * q.abs());
    }

    #[test]
    fn divergent_integral_is_reported() {
        let opts = QuadOptions { max_intervals: 200, ..QuadOptions::default() };
        let r = integrate_half_line(|u| 1.0 / u, &opts);
        assert!(matches!(r, Err(Error::Numeric { .. })));
    }
}
