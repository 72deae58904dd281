//! Path loss, Rayleigh fading and the SIR at the reference receiver.

use crate::error::{Error, Result};
use crate::geometry::NetworkSample;

/// `r^-alpha` from a squared distance, with shortcuts for the common exponents.
#[inline]
pub fn path_gain_sq(r2: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (r2 * r2)
    } else if alpha == 3.0 {
        1.0 / (r2 * r2.sqrt())
    } else {
        r2.powf(-0.5 * alpha)
    }
}

#[inline]
pub fn path_gain(r: f64, alpha: f64) -> f64 {
    path_gain_sq(r * r, alpha)
}

/// Sum of `fades[j] * |X_j|^-alpha` over active non-reference transmitters.
pub fn interference_at_origin(sample: &NetworkSample, fades: &[f64], alpha: f64) -> f64 {
    sample
        .tx
        .iter()
        .zip(fades)
        .zip(&sample.active)
        .enumerate()
        .filter(|&(j, (_, &on))| on && j != sample.reference)
        .map(|(_, ((x, &h), _))| h * path_gain_sq(x.norm_sq(), alpha))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirSample {
    pub signal: f64,
    pub interference: f64,
    pub sir: f64,
}

impl SirSample {
    pub fn new(signal: f64, interference: f64) -> Self {
        let sir = if interference > 0.0 { signal / interference } else { f64::INFINITY };
        SirSample { signal, interference, sir }
    }

    pub fn is_outage(&self, beta: f64) -> bool {
        self.sir < beta
    }
}

pub fn sir_at_reference(sample: &NetworkSample, interference: f64, alpha: f64) -> Result<SirSample> {
    let r = sample.reference;
    if !sample.active[r] {
        return Err(Error::Contract("reference transmitter is not scheduled".into()));
    }
    let signal = sample.signal_fades[r] * path_gain(sample.link_distances[r], alpha);
    Ok(SirSample::new(signal, interference))
}

/// Interference left after one pass of cancellation: a term `g` is removed
/// when `g / (total - g + signal) >= beta`.
pub fn residual_after_cancellation(terms: &[f64], signal: f64, beta: f64) -> (f64, usize) {
    let total: f64 = terms.iter().sum();
    let mut residual = total;
    let mut canceled = 0;
    for &g in terms {
        if g >= beta * (total - g + signal) {
            residual -= g;
            canceled += 1;
        }
    }
    (residual.max(0.0), canceled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;
    use crate::geometry::{sample_network, Window};

    #[test]
    fn gain_shortcuts_agree_with_powf() {
        for &a in &[3.0, 4.0, 3.5] {
            for &r in &[1.0, 2.5, 80.0] {
                let g = path_gain(r, a);
                assert!((g - r.powf(-a)).abs() < 1e-14 * g);
            }
        }
    }

    #[test]
    fn no_interference_means_no_outage() {
        let s = SirSample::new(1e-6, 0.0);
        assert!(s.sir.is_infinite());
        assert!(!s.is_outage(1e9));
    }

    #[test]
    fn campbell_mean_with_exclusion() {
        // Mean of sum over |x| in [1, R] of H |x|^-4 is 2 pi lambda (1 - R^-2) / 2.
        let lambda = 1.0;
        let radius = 20.0;
        let w = Window::new(radius).unwrap();
        let c = NetworkConfig { distance: crate::config::DistanceLaw::Constant { d: 1.0 }, ..NetworkConfig::baseline(lambda) };
        let n = 10_000;
        let mut total = 0.0;
        for seed in 0..n {
            let s = sample_network(&c, &w, seed).unwrap();
            total += s
                .tx
                .iter()
                .zip(&s.interference_fades)
                .skip(1)
                .filter(|(x, _)| x.norm_sq() >= 1.0)
                .map(|(x, h)| h * path_gain_sq(x.norm_sq(), 4.0))
                .sum::<f64>();
        }
        let mean = total / n as f64;
        let campbell = std::f64::consts::PI * lambda * (1.0 - radius.powi(-2));
        assert!((mean / campbell - 1.0).abs() < 0.03, "mean {mean} vs {campbell}");
    }

    #[test]
    fn cancellation_removes_dominant_term() {
        let (res, k) = residual_after_cancellation(&[10.0, 0.1, 0.1], 0.5, 2.0);
        assert_eq!(k, 1);
        assert!((res - 0.2).abs() < 1e-12);
        let (res, k) = residual_after_cancellation(&[1.0, 1.0], 0.5, 2.0);
        assert_eq!(k, 0);
        assert_eq!(res, 2.0);
    }
}
