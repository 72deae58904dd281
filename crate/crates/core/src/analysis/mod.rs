//! Closed-form outage bounds and the quantities built from them.

mod asymptotics;
mod cancellation;
mod functionals;
mod inversion;

pub use asymptotics::{asymptotic_ratio, Regime, RatioScheme};
pub use cancellation::{cancelable_intensity, ic_outage_bounds, ic_outage_bounds_dcas, ic_outage_bounds_dias, ic_outage_bounds_dicas};
pub use functionals::{
    beta_mean_functional, conditional_weakness_appendix, conditional_weakness_exact, dominant_coverage_measure,
    gamma_mean_functional, nearest_pair_expectation,
};
pub use inversion::{
    invert_outage_for_density, invert_outage_for_density_memo, max_contention_density, max_contention_density_memo, BoundMemo, BoundSelector,
    DensityBounds, InversionOptions,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::quad::{integrate_half_line, QuadOptions};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};
use crate::solvers::{transmission_probs, TransmissionProbs};

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `pi Gamma(1 + 2/alpha) Gamma(1 - 2/alpha)`.
pub fn psi(alpha: f64) -> f64 {
    let d = 2.0 / alpha;
    PI * gamma(1.0 + d) * gamma(1.0 - d)
}

/// `beta^(2/alpha) psi E[D^2]`, the mean dominant-interferer area without scheduling.
pub fn coverage_area_unscheduled(config: &NetworkConfig) -> f64 {
    config.beta.powf(config.delta()) * psi(config.alpha) * config.distance.moment(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageBounds {
    pub lower: f64,
    pub upper: f64,
    /// The upper bound was clamped to one because its correction term had
    /// left the region where it is monotone.
    pub clamped: bool,
}

impl OutageBounds {
    pub fn exact(q: f64) -> Self {
        OutageBounds { lower: q, upper: q, clamped: false }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }
}

/// Value of `A` beyond which the correction `1 - (alpha-1) A / ((alpha-1) - A)^2`
/// stops being positive: the smaller root `(alpha-1)(3 - sqrt 5) / 2`.
pub fn clamp_threshold(alpha: f64) -> f64 {
    (alpha - 1.0) * (3.0 - 5f64.sqrt()) / 2.0
}

/// Lower and upper CCDF factors `1 - e^-A` and `1 - (1 - (alpha-1)A/((alpha-1)-A)^2)^+ e^-A`.
pub fn ccdf_factors(a: f64, alpha: f64) -> OutageBounds {
    if a.is_infinite() {
        return OutageBounds { lower: 1.0, upper: 1.0, clamped: true };
    }
    let lower = -(-a).exp_m1();
    if a >= clamp_threshold(alpha) {
        return OutageBounds { lower, upper: 1.0, clamped: true };
    }
    let m = alpha - 1.0;
    let corr = 1.0 - m * a / ((m - a) * (m - a));
    // 1 - corr e^-a = (1 - e^-a) + (1 - corr) e^-a
    let upper = lower + (1.0 - corr) * (-a).exp();
    OutageBounds { lower, upper: upper.min(1.0), clamped: false }
}

fn assemble(a: f64, one_minus_b: f64, alpha: f64) -> OutageBounds {
    let f = ccdf_factors(a, alpha);
    OutageBounds { lower: f.lower * one_minus_b, upper: f.upper * one_minus_b, clamped: f.clamped }
}

/// Radial intensity of an interferer field.
#[derive(Clone, Copy)]
pub enum Intensity<'a> {
    Constant(f64),
    Radial(&'a dyn Fn(f64) -> f64),
}

/// `A(x) = (2 pi / alpha) x^(-2/alpha) int lambda((u/x)^(1/alpha)) u^(2/alpha - 1) e^-u du`.
pub fn a_function(x: f64, intensity: Intensity<'_>, alpha: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("shot-noise level must be positive, got {x}")));
    }
    if !(alpha > 2.0) {
        return Err(Error::domain(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    let d = 2.0 / alpha;
    match intensity {
        Intensity::Constant(l) => Ok(PI * x.powf(-d) * gamma(1.0 + d) * l),
        Intensity::Radial(f) => {
            let q = integrate_half_line(|u| f((u / x).powf(1.0 / alpha)) * u.powf(d - 1.0) * (-u).exp(), &QuadOptions::default())?;
            Ok(2.0 * PI / alpha * x.powf(-d) * q.value)
        }
    }
}

/// Lower and upper bounds on `P[I >= x]` for Rayleigh shot noise.
pub fn shot_noise_ccdf_bounds(x: f64, intensity: Intensity<'_>, alpha: f64) -> Result<OutageBounds> {
    Ok(ccdf_factors(a_function(x, intensity, alpha)?, alpha))
}

fn check_density(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("active density must be finite and >= 0, got {lambda}")))
    }
}

/// `A_c = pi Gamma(1 + 2/alpha) lambda beta^(2/alpha) Delta^(-2/alpha)`.
pub fn a_dcas(lambda: f64, threshold: f64, config: &NetworkConfig) -> f64 {
    if threshold == 0.0 {
        return f64::INFINITY;
    }
    let d = config.delta();
    PI * gamma(1.0 + d) * lambda * config.beta.powf(d) * threshold.powf(-d)
}

/// `1 - E[exp(-lambda beta^(2/alpha) psi D^2)]`.
pub fn one_minus_b(lambda: f64, config: &NetworkConfig) -> Result<f64> {
    let k = lambda * config.beta.powf(config.delta()) * psi(config.alpha);
    config.distance.expect(|d| -(-k * d * d).exp_m1())
}

pub fn dcas_outage_bounds(lambda_c: f64, config: &NetworkConfig, channel: &ThresholdPolicy) -> Result<OutageBounds> {
    dicas_outage_bounds(lambda_c, config, channel, 1.0)
}

pub fn dias_outage_bounds(lambda_i: f64, config: &NetworkConfig, p_i: f64) -> Result<OutageBounds> {
    check_density(lambda_i)?;
    if !(0.0..=1.0).contains(&p_i) {
        return Err(Error::param(format!("transmission probability must lie in [0, 1], got {p_i}")));
    }
    let m = lambda_i * p_i * coverage_area_unscheduled(config);
    Ok(OutageBounds { lower: -(-m).exp_m1(), upper: -(-2.0 * m).exp_m1(), clamped: false })
}

pub fn dicas_outage_bounds(lambda_ic: f64, config: &NetworkConfig, channel: &ThresholdPolicy, p_i: f64) -> Result<OutageBounds> {
    check_density(lambda_ic)?;
    if !(0.0..=1.0).contains(&p_i) {
        return Err(Error::param(format!("transmission probability must lie in [0, 1], got {p_i}")));
    }
    if lambda_ic == 0.0 || p_i == 0.0 {
        return Ok(OutageBounds::zero());
    }
    let th = channel.eval(lambda_ic);
    let a = a_dcas(lambda_ic, th, config) * p_i;
    Ok(assemble(a, one_minus_b(lambda_ic * p_i, config)?, config.alpha))
}

/// Outage bounds of `scheme` at active density `lambda`, with the transmission
/// probabilities they were evaluated at.
pub fn outage_bounds_at(lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<(OutageBounds, TransmissionProbs)> {
    check_density(lambda)?;
    let probs = transmission_probs(lambda, scheme, config)?;
    let b = match scheme {
        SchedulerKind::None => OutageBounds::exact(-(-lambda * coverage_area_unscheduled(config)).exp_m1()),
        SchedulerKind::Dcas { channel } => dcas_outage_bounds(lambda, config, channel)?,
        SchedulerKind::Dias { .. } => dias_outage_bounds(lambda, config, probs.p_i)?,
        SchedulerKind::Dicas { channel, .. } => dicas_outage_bounds(lambda, config, channel, probs.p_i)?,
    };
    Ok((b, probs))
}

/// `b lambda (1 - epsilon)`.
pub fn transmission_capacity(lambda: f64, epsilon: f64, rate_b: f64) -> f64 {
    rate_b * lambda * (1.0 - epsilon)
}

/// Largest density without scheduling whose outage is at most `epsilon`.
pub fn unscheduled_density(epsilon: f64, config: &NetworkConfig) -> f64 {
    -(-epsilon).ln_1p() / coverage_area_unscheduled(config)
}
