use std::cell::Cell;
use std::f64::consts::PI;

use crate::analysis::{coverage_area_unscheduled, gamma, psi};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_half_line, QuadOptions};

/// `(1/Gamma(x)) int lambda(transform(u)) u^(x-1) e^-u du`.
pub fn gamma_mean_functional(intensity: &dyn Fn(f64) -> f64, x: f64, transform: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("gamma shape must be positive, got {x}")));
    }
    let q = integrate_half_line(|u| intensity(transform(u)) * u.powf(x - 1.0) * (-u).exp(), &QuadOptions::default())?;
    Ok(q.value / gamma(x))
}

/// `(Gamma(x+y) / (Gamma(x) Gamma(y))) int lambda(transform(t)) t^(x-1) / (1+t)^(x+y) dt`.
pub fn beta_mean_functional(intensity: &dyn Fn(f64) -> f64, x: f64, y: f64, transform: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::domain(format!("beta shapes must be positive, got ({x}, {y})")));
    }
    let q = integrate_half_line(|t| intensity(transform(t)) * t.powf(x - 1.0) * (1.0 + t).powf(-(x + y)), &QuadOptions::default())?;
    Ok(q.value * gamma(x + y) / (gamma(x) * gamma(y)))
}

/// Mean area of the region where a single interferer dominates a reference
/// link whose fade is conditioned on `H D^-alpha >= Delta`.
pub fn dominant_coverage_measure(threshold: f64, config: &NetworkConfig) -> Result<f64> {
    config.validate()?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::param(format!("threshold must be >= 0, got {threshold}")));
    }
    if threshold == 0.0 {
        return Ok(coverage_area_unscheduled(config));
    }
    if threshold.is_infinite() {
        return Ok(0.0);
    }
    let (a, d) = (config.alpha, config.delta());
    let k = config.beta.powf(d) * psi(a);
    let inner = |dist: f64| -> Result<f64> {
        let c = threshold * dist.powf(a);
        Ok(dist * dist * beta_mean_functional(&|t| (-c * t).exp(), d, 1.0 - d, &|t| t)?)
    };
    match config.distance {
        crate::config::DistanceLaw::Constant { d: dist } => Ok(k * inner(dist)?),
        _ => {
            let err = Cell::new(None);
            let v = config.distance.expect(|dist| {
                inner(dist).unwrap_or_else(|e| {
                    err.set(Some(e));
                    0.0
                })
            });
            match err.take() {
                Some(e) => Err(e),
                None => Ok(k * v?),
            }
        }
    }
}

/// `E[g(D1, D2)]` for the two smallest distances from a point to a PPP of density `lambda`.
///
/// With `v = pi lambda r^2` the pair is uniform-then-exponential:
/// density `e^-v2` on `0 < v1 < v2`.
pub fn nearest_pair_expectation(g: &dyn Fn(f64, f64) -> f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("density must be positive, got {lambda}")));
    }
    let r = |v: f64| (v / (PI * lambda)).sqrt();
    let opts = QuadOptions { rel_tol: 1e-9, ..QuadOptions::default() };
    let err = Cell::new(None);
    let q = integrate_half_line(
        |v2| {
            if v2 > 745.0 {
                return 0.0;
            }
            let r2 = r(v2);
            match integrate(|v1| g(r(v1), r2), 0.0, v2, &opts) {
                Ok(inner) => (-v2).exp() * inner.value,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            }
        },
        &QuadOptions::default(),
    );
    match err.take() {
        Some(e) => Err(e),
        None => Ok(q?.value),
    }
}

/// `P[H2 D2^-alpha <= rho | H1 D1^-alpha <= rho]` for the nearest and second
/// nearest receivers with independent unit fades.
pub fn conditional_weakness_exact(rho: f64, lambda: f64, alpha: f64) -> Result<f64> {
    let pass = |d: f64| -(-rho * d.powf(alpha)).exp_m1();
    let joint = nearest_pair_expectation(&|d1, d2| pass(d1) * pass(d2), lambda)?;
    let first = nearest_pair_expectation(&|d1, _| pass(d1), lambda)?;
    Ok(joint / first)
}

/// The same conditional probability through the factorised expression
/// `[1 - E e^{-D1^a rho} (E[D2^a/(D1^a+D2^a)] + E[D1^a/(D1^a+D2^a)] E e^{-D2^a rho} / E e^{-D1^a rho})] / [1 - E e^{-D1^a rho}]`.
pub fn conditional_weakness_appendix(rho: f64, lambda: f64, alpha: f64) -> Result<f64> {
    let e1 = nearest_pair_expectation(&|d1, _| (-rho * d1.powf(alpha)).exp(), lambda)?;
    let e2 = nearest_pair_expectation(&|_, d2| (-rho * d2.powf(alpha)).exp(), lambda)?;
    let w2 = nearest_pair_expectation(&|d1, d2| 1.0 / (1.0 + (d1 / d2).powf(alpha)), lambda)?;
    let w1 = 1.0 - w2;
    Ok((1.0 - e1 * (w2 + w1 * e2 / e1)) / (1.0 - e1))
}
