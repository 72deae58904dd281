//! Network parameters and the link-distance law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// Law of the transmitter-receiver distance `D`, supported on `[1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistanceLaw {
    Constant { d: f64 },
    Uniform { min: f64, max: f64 },
}

impl DistanceLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistanceLaw::Constant { d } => {
                if !(d.is_finite() && d >= 1.0) {
                    return Err(Error::param(format!("link distance must be finite and >= 1, got {d}")));
                }
            }
            DistanceLaw::Uniform { min, max } => {
                if !(min.is_finite() && max.is_finite() && min >= 1.0 && max > min) {
                    return Err(Error::param(format!(
                        "uniform link distance needs 1 <= min < max, got [{min}, {max}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistanceLaw::Constant { d } => d,
            DistanceLaw::Uniform { min, max } => min + (max - min) * rng.random::<f64>(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            DistanceLaw::Constant { d } => d,
            DistanceLaw::Uniform { max, .. } => max,
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            DistanceLaw::Constant { d } => d,
            DistanceLaw::Uniform { min, .. } => min,
        }
    }

    /// `E[f(D)]`, exact for a point mass and by quadrature otherwise.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match *self {
            DistanceLaw::Constant { d } => Ok(f(d)),
            DistanceLaw::Uniform { min, max } => {
                let q = integrate(&f, min, max, &QuadOptions::default())?;
                Ok(q.value / (max - min))
            }
        }
    }

    /// `E[D^k]` in closed form.
    pub fn moment(&self, k: f64) -> f64 {
        match *self {
            DistanceLaw::Constant { d } => d.powf(k),
            DistanceLaw::Uniform { min, max } => {
                if (k + 1.0).abs() < 1e-12 {
                    (max / min).ln() / (max - min)
                } else {
                    (max.powf(k + 1.0) - min.powf(k + 1.0)) / ((k + 1.0) * (max - min))
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }
}

/// How the transmission probability of the interferer-aware test is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiasLaw {
    /// `P[H D^-alpha <= Delta]` with `D` the nearest-receiver distance, which
    /// is what the simulated rule does.
    #[default]
    NearestNeighbor,
    /// The closed-form substitution with exponent `2/alpha` on the scaled
    /// distance; kept for the asymptotic regime analysis built on it.
    Printed,
}

/// Variant of the cancelable-interferer intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcFormula {
    /// Exponent `-beta_tilde * Delta_c * r^alpha` in the scheduling term.
    #[default]
    Derived,
    /// Exponent `-beta * Delta_c * r^alpha` in the scheduling term.
    BetaLiteral,
    /// `beta_tilde` replaced by `beta` inside both exponential terms.
    BetaEverywhere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_t: f64,
    pub distance: DistanceLaw,
    pub epsilon: f64,
    #[serde(default = "unit_rate")]
    pub rate_b: f64,
    #[serde(default)]
    pub dias_law: DiasLaw,
    #[serde(default)]
    pub ic_formula: IcFormula,
}

fn unit_rate() -> f64 {
    1.0
}

impl NetworkConfig {
    /// `alpha = 4`, `beta = 2`, `D = 8`, `epsilon = 0.1`.
    pub fn baseline(lambda_t: f64) -> Self {
        NetworkConfig {
            alpha: 4.0,
            beta: 2.0,
            lambda_t,
            distance: DistanceLaw::Constant { d: 8.0 },
            epsilon: 0.1,
            rate_b: 1.0,
            dias_law: DiasLaw::NearestNeighbor,
            ic_formula: IcFormula::Derived,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::domain(format!("path-loss exponent must exceed 2, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param(format!("SIR threshold must be positive, got {}", self.beta)));
        }
        if !(self.lambda_t.is_finite() && self.lambda_t >= 0.0) {
            return Err(Error::param(format!("density must be finite and >= 0, got {}", self.lambda_t)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("outage target must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.rate_b.is_finite() && self.rate_b > 0.0) {
            return Err(Error::param(format!("rate must be positive, got {}", self.rate_b)));
        }
        self.distance.validate()
    }

    pub fn with_lambda_t(mut self, lambda_t: f64) -> Self {
        self.lambda_t = lambda_t;
        self
    }

    /// `delta = 2 / alpha`.
    pub fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    /// `beta / (1 + beta)`.
    pub fn beta_tilde(&self) -> f64 {
        self.beta / (1.0 + self.beta)
    }
}
