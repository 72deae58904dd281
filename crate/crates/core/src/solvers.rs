//! Transmission probabilities and the active-density fixed point.

use std::f64::consts::PI;

use crate::config::{DiasLaw, NetworkConfig};
use crate::error::{Error, Result};
use crate::quad::{integrate_half_line, QuadOptions};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};

const DAMPING: f64 = 0.5;

/// Root of `f` in `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numeric { what: format!("no sign change on [{lo:e}, {hi:e}]"), residual: flo.abs().min(fhi.abs()) });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `p_c = E[exp(-D^alpha Delta_c)]`.
pub fn transmission_prob_dcas(lambda_c: f64, config: &NetworkConfig, policy: &ThresholdPolicy) -> Result<f64> {
    let th = policy.eval(lambda_c);
    if th.is_infinite() {
        return Ok(0.0);
    }
    config.distance.expect(|d| (-th * d.powf(config.alpha)).exp())
}

fn dias_exponent(config: &NetworkConfig) -> f64 {
    match config.dias_law {
        DiasLaw::NearestNeighbor => config.alpha / 2.0,
        DiasLaw::Printed => 2.0 / config.alpha,
    }
}

/// `1 - int_0^inf exp(-Delta (u / (pi lambda_t))^e - u) du`, the probability
/// that the interferer test passes when unintended receivers have density
/// `lambda_t`.
pub fn dias_prob_given_parent(lambda_t: f64, threshold: f64, config: &NetworkConfig) -> Result<f64> {
    if threshold.is_infinite() || lambda_t == 0.0 {
        return Ok(1.0);
    }
    if threshold == 0.0 || lambda_t.is_infinite() {
        return Ok(0.0);
    }
    let e = dias_exponent(config);
    let scale = 1.0 / (PI * lambda_t);
    let q = integrate_half_line(|u| (-u).exp() * -(-threshold * (u * scale).powf(e)).exp_m1(), &QuadOptions::default())?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// Solves `p = P[pass | lambda_t = lambda / (co_thinning * p)]` for the
/// largest root in `(0, 1]`; returns 0 when only the trivial root exists.
pub fn dias_prob_implicit(lambda: f64, co_thinning: f64, threshold: f64, config: &NetworkConfig) -> Result<f64> {
    if lambda == 0.0 || threshold.is_infinite() {
        return Ok(1.0);
    }
    if threshold == 0.0 || co_thinning == 0.0 {
        return Ok(0.0);
    }
    let g = |p: f64| dias_prob_given_parent(lambda / (co_thinning * p), threshold, config);
    // g is increasing, so iterates from 1 fall monotonically to the largest root
    // and plain steps are safe once the damped ones have reached small p.
    let mut p = 1.0;
    for _ in 0..400 {
        let gp = g(p)?;
        if (gp - p).abs() <= 1e-10 * p {
            return Ok(gp);
        }
        p = if p < 1e-6 { gp } else { (1.0 - DAMPING) * p + DAMPING * gp };
        if p < 1e-300 {
            return Ok(0.0);
        }
    }
    // Slow contraction near a tangency; bracket the largest root instead.
    let mut hi = 1.0;
    let mut lo = 0.5;
    for _ in 0..64 {
        if g(lo)? - lo > 0.0 {
            let root = bisect(|p| Ok(g(p)? - p), lo, hi, 1e-14, 200)?;
            return Ok(root);
        }
        hi = lo;
        lo *= 0.5;
    }
    let residual = g(p)? - p;
    if residual.abs() < 1e-6 {
        Ok(0.0)
    } else {
        Err(Error::numeric("interferer-test probability did not converge", residual))
    }
}

/// `p_i` at active density `lambda_i` for the interferer-only scheme.
pub fn transmission_prob_dias(lambda_i: f64, config: &NetworkConfig, policy: &ThresholdPolicy) -> Result<f64> {
    dias_prob_implicit(lambda_i, 1.0, policy.eval(lambda_i), config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionProbs {
    pub p_c: f64,
    pub p_i: f64,
}

impl TransmissionProbs {
    pub fn product(&self) -> f64 {
        self.p_c * self.p_i
    }
}

/// Per-test transmission probabilities at active density `lambda`.
///
/// For the combined scheme the interferer test sees all `lambda / (p_c p_i)`
/// receivers under the nearest-neighbour law; the printed law keeps the
/// single-scheme relation `lambda_t = lambda / p_i`.
pub fn transmission_probs(lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<TransmissionProbs> {
    let p_c = match scheme.channel() {
        Some(c) => transmission_prob_dcas(lambda, config, c)?,
        None => 1.0,
    };
    let p_i = match scheme.interferer() {
        Some(i) => {
            let co = match (scheme, config.dias_law) {
                (SchedulerKind::Dicas { .. }, DiasLaw::NearestNeighbor) => p_c,
                _ => 1.0,
            };
            dias_prob_implicit(lambda, co, i.eval(lambda), config)?
        }
        None => 1.0,
    };
    Ok(TransmissionProbs { p_c, p_i })
}

/// Parent density that yields active density `lambda`; infinite when the
/// scheme cannot reach it.
pub fn parent_density(lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let p = transmission_probs(lambda, scheme, config)?.product();
    Ok(if p > 0.0 { lambda / p } else { f64::INFINITY })
}

/// `lambda_t * p(lambda)` for the parent density in `config`.
pub fn thinning_map(lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<f64> {
    let lt = config.lambda_t;
    let p_c = match scheme.channel() {
        Some(c) => transmission_prob_dcas(lambda, config, c)?,
        None => 1.0,
    };
    let p_i = match scheme.interferer() {
        Some(i) => match config.dias_law {
            DiasLaw::NearestNeighbor => dias_prob_given_parent(lt, i.eval(lambda), config)?,
            DiasLaw::Printed => dias_prob_implicit(lambda, 1.0, i.eval(lambda), config)?,
        },
        None => 1.0,
    };
    Ok(lt * p_c * p_i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    /// More than one positive root was detected; the smallest is returned.
    pub multiple_roots: bool,
}

/// Active density `lambda = lambda_t p(lambda)` by damped iteration with a
/// bracketing fallback.
pub fn solve_active_density(scheme: &SchedulerKind, config: &NetworkConfig) -> Result<FixedPointResult> {
    config.validate()?;
    scheme.validate()?;
    let lt = config.lambda_t;
    if lt == 0.0 {
        return Ok(FixedPointResult { lambda: 0.0, iterations: 0, residual: 0.0, multiple_roots: false });
    }
    if let SchedulerKind::None = scheme {
        return Ok(FixedPointResult { lambda: lt, iterations: 0, residual: 0.0, multiple_roots: false });
    }
    let tol = 1e-10 * lt;
    let t = |l: f64| thinning_map(l, scheme, config);
    let mut lambda = lt;
    let mut converged = None;
    for it in 1..=500 {
        let next = t(lambda)?;
        if (next - lambda).abs() <= tol {
            converged = Some((next, it));
            break;
        }
        lambda = (1.0 - DAMPING) * lambda + DAMPING * next;
    }

    // Scan for several positive roots of T(l) - l.
    let n = 64;
    let grid: Vec<f64> = (0..=n).map(|k| lt * 10f64.powf(-12.0 * (1.0 - k as f64 / n as f64))).collect();
    let vals = grid.iter().map(|&l| Ok(t(l)? - l)).collect::<Result<Vec<f64>>>()?;
    let brackets: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.0 && vals[k + 1] <= 0.0 || vals[k] < 0.0 && vals[k + 1] >= 0.0).collect();
    let multiple = brackets.len() > 1;

    let (lambda, iterations) = match converged {
        Some(c) if !multiple => c,
        _ => {
            let Some(&k) = brackets.first() else {
                return match converged {
                    Some(c) => Ok(FixedPointResult { lambda: c.0, iterations: c.1, residual: (t(c.0)? - c.0).abs(), multiple_roots: false }),
                    None => Err(Error::numeric("active density fixed point did not converge", (t(lambda)? - lambda).abs())),
                };
            };
            let root = bisect(|l| Ok(t(l)? - l), grid[k], grid[k + 1], 1e-13 * lt, 400)?;
            (root, 0)
        }
    };
    let lambda = polish(|l| Ok(t(l)? - l), lambda, 0.01 * tol, lt)?;
    let residual = (t(lambda)? - lambda).abs();
    Ok(FixedPointResult { lambda, iterations, residual, multiple_roots: multiple })
}

/// Brackets the root of `g` next to `x` and bisects until `|g| <= tol`.
fn polish<G: FnMut(f64) -> Result<f64>>(mut g: G, x: f64, tol: f64, scale: f64) -> Result<f64> {
    let gx = g(x)?;
    if gx.abs() <= tol {
        return Ok(x);
    }
    // g decreases through a stable root, so the root lies on the side g points to
    let dir = gx.signum();
    let mut h = (gx.abs()).max(1e-15 * scale);
    for _ in 0..200 {
        let y = (x + dir * h).max(0.0);
        let gy = g(y)?;
        if gy.signum() != gx.signum() || gy == 0.0 {
            let (lo, hi) = if y < x { (y, x) } else { (x, y) };
            return bisect(&mut g, lo, hi, 1e-16 * scale, 400);
        }
        if y == 0.0 {
            break;
        }
        h *= 2.0;
    }
    Ok(x)
}
