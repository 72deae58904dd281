use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Sparse,
    Dense,
}

/// Threshold growth exponents of a scheme: `Delta_c = Theta(lambda^gamma)`, `Delta_i = Theta(lambda^delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioScheme {
    Dcas { gamma: f64 },
    Dias { delta: f64 },
    Dicas { gamma: f64, delta: f64 },
}

/// Limit of `upper / lower` maximum contention density as the network becomes sparse or dense.
pub fn asymptotic_ratio(scheme: RatioScheme, regime: Regime, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    let base = alpha / (alpha - 1.0);
    let half = alpha / 2.0;
    let two = 2.0 / alpha;
    match scheme {
        RatioScheme::Dcas { gamma } => {
            if gamma.is_nan() || gamma < 0.0 {
                return Err(Error::param(format!("gamma must be >= 0, got {gamma}")));
            }
            match regime {
                Regime::Sparse if gamma == 0.0 => Ok(base.sqrt()),
                Regime::Sparse if gamma < half => Ok(base.powf(1.0 / (2.0 - 2.0 * gamma / alpha))),
                Regime::Sparse => Ok(1.0),
                Regime::Dense if gamma == half => Err(Error::Degenerate(format!("dense ratio diverges at gamma = alpha/2 = {half}"))),
                Regime::Dense if gamma > half => Ok(base.powf(alpha / (2.0 * gamma - alpha))),
                Regime::Dense => Ok(1.0),
            }
        }
        RatioScheme::Dias { delta } => {
            if delta.is_nan() {
                return Err(Error::param("delta must be a number"));
            }
            let in_range = match regime {
                Regime::Sparse => delta > two,
                Regime::Dense => delta < two,
            };
            if !in_range {
                return Ok(2.0);
            }
            let den = alpha * (delta + 1.0) - 4.0;
            if den == 0.0 {
                return Err(Error::Degenerate(format!("ratio exponent is singular at delta = {delta}")));
            }
            Ok(2f64.powf((alpha - 2.0) / den))
        }
        RatioScheme::Dicas { gamma, delta } => {
            if !(gamma > 0.0) || delta.is_nan() {
                return Err(Error::param(format!("need gamma > 0 and finite delta, got ({gamma}, {delta})")));
            }
            let den = match regime {
                Regime::Sparse if delta > two && gamma < half => (delta - two) - (gamma / alpha - 1.0) * (1.0 - two),
                Regime::Dense if delta < two && gamma > half => (two - delta) - (1.0 - gamma / alpha) * (1.0 - two),
                _ => return Ok(1.0),
            };
            Ok(base.powf((alpha - 2.0) / (2.0 * alpha * den)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dcas_limits() {
        let r = asymptotic_ratio(RatioScheme::Dcas { gamma: 1.0 }, Regime::Sparse, 4.0).unwrap();
        assert!((r - (4.0f64 / 3.0).powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((r - 1.2114).abs() < 1e-4);
        assert_eq!(asymptotic_ratio(RatioScheme::Dcas { gamma: 2.0 }, Regime::Sparse, 4.0).unwrap(), 1.0);
        assert_eq!(asymptotic_ratio(RatioScheme::Dcas { gamma: 5.0 }, Regime::Sparse, 4.0).unwrap(), 1.0);
        let r = asymptotic_ratio(RatioScheme::Dcas { gamma: 0.0 }, Regime::Sparse, 4.0).unwrap();
        assert!((r - 1.1547).abs() < 1e-4);
        assert_eq!(asymptotic_ratio(RatioScheme::Dcas { gamma: 0.0 }, Regime::Dense, 4.0).unwrap(), 1.0);
        let r = asymptotic_ratio(RatioScheme::Dcas { gamma: 3.0 }, Regime::Dense, 4.0).unwrap();
        assert!((r - (4.0f64 / 3.0).powf(2.0)).abs() < 1e-12);
        assert!(asymptotic_ratio(RatioScheme::Dcas { gamma: 2.0 }, Regime::Dense, 4.0).is_err());
    }

    #[test]
    fn dias_limits() {
        for &d in &[-1.0, 0.0, 0.3, 0.5] {
            assert_eq!(asymptotic_ratio(RatioScheme::Dias { delta: d }, Regime::Sparse, 4.0).unwrap(), 2.0);
        }
        let r = asymptotic_ratio(RatioScheme::Dias { delta: 1.0 }, Regime::Sparse, 4.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(asymptotic_ratio(RatioScheme::Dias { delta: 0.7 }, Regime::Dense, 4.0).unwrap(), 2.0);
        // continuous at delta = 2/alpha
        let r = asymptotic_ratio(RatioScheme::Dias { delta: 0.5 - 1e-9 }, Regime::Dense, 4.0).unwrap();
        assert!((r - 2.0).abs() < 1e-6);
    }

    #[test]
    fn dicas_limits() {
        assert_eq!(asymptotic_ratio(RatioScheme::Dicas { gamma: 1.0, delta: 0.6 }, Regime::Dense, 4.0).unwrap(), 1.0);
        let r = asymptotic_ratio(RatioScheme::Dicas { gamma: 1.0, delta: 0.6 }, Regime::Sparse, 4.0).unwrap();
        // den = 0.1 + 0.75 * 0.5 = 0.475
        assert!((r - (4.0f64 / 3.0).powf(2.0 / (8.0 * 0.475))).abs() < 1e-12);
        assert!(asymptotic_ratio(RatioScheme::Dicas { gamma: 0.0, delta: 0.6 }, Regime::Sparse, 4.0).is_err());
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(asymptotic_ratio(RatioScheme::Dias { delta: 0.0 }, Regime::Sparse, 2.0).is_err());
    }
}
