use std::cell::Cell;
use std::f64::consts::PI;

use crate::analysis::{a_dcas, assemble, beta_mean_functional, gamma_mean_functional, psi, OutageBounds};
use crate::config::{IcFormula, NetworkConfig};
use crate::error::{Error, Result};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};
use crate::solvers::transmission_probs;

fn check(lambda: f64, p_i: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param(format!("active density must be finite and >= 0, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&p_i) {
        return Err(Error::param(format!("transmission probability must lie in [0, 1], got {p_i}")));
    }
    Ok(())
}

/// `E[D^alpha / (D^alpha + s)]`.
fn link_ratio(s: f64, config: &NetworkConfig) -> Result<f64> {
    let a = config.alpha;
    config.distance.expect(|d| {
        let da = d.powf(a);
        da / (da + s)
    })
}

/// Density of active interferers at distance `r` from the reference receiver
/// that a single cancellation pass can remove.
pub fn cancelable_intensity(r: f64, lambda: f64, config: &NetworkConfig, channel: &ThresholdPolicy, p_i: f64) -> Result<f64> {
    check(lambda, p_i)?;
    if r.is_nan() || r < 0.0 {
        return Err(Error::domain(format!("distance must be >= 0, got {r}")));
    }
    let th = channel.eval(lambda);
    intensity_at(r, lambda, th, p_i, config)
}

fn intensity_at(r: f64, lambda: f64, th: f64, p_i: f64, config: &NetworkConfig) -> Result<f64> {
    if r.is_infinite() {
        return Ok(0.0);
    }
    let (a, d) = (config.alpha, config.delta());
    let bt = config.beta_tilde();
    let ra = r.powf(a);
    let (shot, sched) = match config.ic_formula {
        IcFormula::Derived => (bt, bt),
        IcFormula::BetaLiteral => (bt, config.beta),
        IcFormula::BetaEverywhere => (config.beta, config.beta),
    };
    let sched_term = if th == 0.0 { 0.0 } else { sched * th * ra };
    let expo = PI * psi(a) * shot.powf(d) * r * r * lambda * p_i + sched_term;
    if expo.is_infinite() {
        return Ok(0.0);
    }
    Ok(lambda * (-expo).exp() * link_ratio(bt * ra, config)?)
}

/// Interference-cancellation outage bounds for the combined scheme.
pub fn ic_outage_bounds_dicas(lambda: f64, config: &NetworkConfig, channel: &ThresholdPolicy, p_i: f64) -> Result<OutageBounds> {
    check(lambda, p_i)?;
    if lambda == 0.0 || p_i == 0.0 {
        return Ok(OutageBounds::zero());
    }
    let (a, d, beta) = (config.alpha, config.delta(), config.beta);
    let th = channel.eval(lambda);
    let failure = Cell::new(None);
    let lam = |r: f64| {
        intensity_at(r, lambda, th, p_i, config).unwrap_or_else(|e| {
            failure.set(Some(e));
            0.0
        })
    };

    let a_hat = if th == 0.0 || th.is_infinite() {
        if th.is_infinite() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        let g = gamma_mean_functional(&lam, d, &|u| (beta * u / th).powf(1.0 / a))?;
        a_dcas(lambda, th, config) * p_i * (1.0 - g / lambda).max(0.0)
    };

    let k = p_i * beta.powf(d) * psi(a);
    let omb = config.distance.expect(|dist| {
        match beta_mean_functional(&lam, d, 1.0 - d, &|t| dist * (beta * t).powf(1.0 / a)) {
            Ok(b) => -(-k * dist * dist * (lambda - b).max(0.0)).exp_m1(),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(assemble(a_hat, omb, a))
}

pub fn ic_outage_bounds_dcas(lambda: f64, config: &NetworkConfig, channel: &ThresholdPolicy) -> Result<OutageBounds> {
    ic_outage_bounds_dicas(lambda, config, channel, 1.0)
}

/// Interference-cancellation outage bounds for the interferer-only scheme.
pub fn ic_outage_bounds_dias(lambda: f64, config: &NetworkConfig, p_i: f64) -> Result<OutageBounds> {
    check(lambda, p_i)?;
    if lambda == 0.0 || p_i == 0.0 {
        return Ok(OutageBounds::zero());
    }
    let (a, d, beta) = (config.alpha, config.delta(), config.beta);
    let bt = config.beta_tilde();
    let shot = match config.ic_formula {
        IcFormula::BetaEverywhere => beta,
        _ => bt,
    };
    let failure = Cell::new(None);
    let m = config.distance.expect(|dist| {
        let da = dist.powf(a);
        let h = |t: f64| {
            let ratio = link_ratio(bt * beta * da * t, config).unwrap_or_else(|e| {
                failure.set(Some(e));
                0.0
            });
            ratio * (-PI * psi(a) * (shot * beta * t).powf(d) * dist * dist * lambda).exp()
        };
        match beta_mean_functional(&h, d, 1.0 - d, &|t| t) {
            Ok(b) => dist * dist * (1.0 - b),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let x = lambda * p_i * beta.powf(d) * psi(a) * m;
    Ok(OutageBounds { lower: -(-x).exp_m1(), upper: -(-2.0 * x).exp_m1(), clamped: false })
}

/// Interference-cancellation bounds of `scheme` at active density `lambda`.
pub fn ic_outage_bounds(lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<OutageBounds> {
    let probs = transmission_probs(lambda, scheme, config)?;
    match scheme {
        SchedulerKind::None => ic_outage_bounds_dcas(lambda, config, &ThresholdPolicy::fixed(0.0)),
        SchedulerKind::Dcas { channel } => ic_outage_bounds_dcas(lambda, config, channel),
        SchedulerKind::Dias { .. } => ic_outage_bounds_dias(lambda, config, probs.p_i),
        SchedulerKind::Dicas { channel, .. } => ic_outage_bounds_dicas(lambda, config, channel, probs.p_i),
    }
}
