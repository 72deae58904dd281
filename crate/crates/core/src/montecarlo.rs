//! Trial-based estimates of the quantities the analysis module bounds.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{interference_at_origin, path_gain_sq, residual_after_cancellation, sir_at_reference};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{poisson_count, sample_network_with, substream, NetworkSample, Point, Window};
use crate::schedulers::{apply_scheduler_with, condition_reference_fade, SchedulerKind};
use crate::solvers::{solve_active_density, transmission_prob_dcas};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    /// Receivers near the boundary are mirrored outward so transmitters there
    /// see a full neighbourhood.
    #[default]
    Mirror,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Sample the whole parent process and apply the scheduler.
    #[default]
    Parent,
    /// Sample only what the scheduler's outcome depends on.
    Thinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub trials: u64,
    pub window_radius: f64,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub edge_policy: EdgePolicy,
    #[serde(default)]
    pub sampling: Sampling,
    /// Refuse runs whose expected node count per trial exceeds this.
    #[serde(default = "default_max_nodes")]
    pub max_expected_nodes: f64,
}

fn default_max_nodes() -> f64 {
    2e5
}

impl McSettings {
    pub fn new(trials: u64, window_radius: f64, master_seed: u64) -> Self {
        McSettings {
            trials,
            window_radius,
            master_seed,
            edge_policy: EdgePolicy::Mirror,
            sampling: Sampling::Parent,
            max_expected_nodes: default_max_nodes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::param(format!("at least 100 trials are required, got {}", self.trials)));
        }
        if !(self.window_radius.is_finite() && self.window_radius > 0.0) {
            return Err(Error::param(format!("window radius must be positive, got {}", self.window_radius)));
        }
        if !(self.max_expected_nodes > 0.0) {
            return Err(Error::param("node budget must be positive"));
        }
        Ok(())
    }

    fn window(&self) -> Result<Window> {
        Window::new(self.window_radius)
    }

    fn check_budget(&self, density: f64) -> Result<()> {
        let expected = density * PI * self.window_radius * self.window_radius;
        if expected > self.max_expected_nodes {
            return Err(Error::Budget { expected, limit: self.max_expected_nodes });
        }
        Ok(())
    }
}

/// A mean with its 99% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_99: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
}

impl McEstimate {
    /// Binomial proportion: normal interval, Wilson interval when fewer than
    /// 30 successes or failures.
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = if trials == 0 { 0.0 } else { successes as f64 / n };
        if trials == 0 {
            return McEstimate { mean: 0.0, half_width_99: 0.5, lower: 0.0, upper: 1.0, trials };
        }
        let (lower, upper) = if successes < 30 || trials - successes < 30 {
            let z2 = Z99 * Z99;
            let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
            let half = Z99 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
            ((centre - half).max(0.0), (centre + half).min(1.0))
        } else {
            let h = Z99 * (p * (1.0 - p) / n).sqrt();
            ((p - h).max(0.0), (p + h).min(1.0))
        };
        McEstimate { mean: p, half_width_99: 0.5 * (upper - lower), lower, upper, trials }
    }

    /// Sample mean with a normal interval from the sample variance.
    pub fn from_moments(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        let h = Z99 * (var / n).sqrt();
        McEstimate { mean, half_width_99: h, lower: mean - h, upper: mean + h, trials }
    }

    /// Whether `[lo, hi]` meets the confidence interval.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.upper >= lo && self.lower <= hi
    }
}

fn count_trials<F>(trials: u64, seed: u64, f: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut substream(seed, t)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Sums `f` over trials in fixed chunks so the total does not depend on the
/// thread count.
fn sum_trials<F>(trials: u64, seed: u64, width: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64, &mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
{
    const CHUNK: u64 = 1024;
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            let mut row = vec![0.0; width];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                row.iter_mut().for_each(|v| *v = 0.0);
                f(t, &mut substream(seed, t), &mut row)?;
                acc.iter_mut().zip(&row).for_each(|(a, v)| *a += v);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; width];
    for p in parts {
        total.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
    }
    Ok(total)
}

/// Samples one scheduled network for the reference pair.
pub fn scheduled_sample(
    config: &NetworkConfig,
    scheme: &SchedulerKind,
    active_density: f64,
    settings: &McSettings,
    window: &Window,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkSample> {
    let alpha = config.alpha;
    let edge = match settings.edge_policy {
        EdgePolicy::Mirror => Some(window),
        EdgePolicy::None => None,
    };
    match (settings.sampling, scheme) {
        (Sampling::Thinned, SchedulerKind::Dcas { channel }) => {
            // scheduled transmitters form a PPP of the active density
            let mut s = sample_network_with(&config.with_lambda_t(active_density), window, rng)?;
            condition_reference_fade(&mut s, channel.eval(active_density), alpha, rng);
            Ok(s)
        }
        (Sampling::Thinned, SchedulerKind::Dicas { channel, interferer }) => {
            let p_c = transmission_prob_dcas(active_density, config, channel)?;
            let lt = config.lambda_t;
            let mut s = sample_network_with(&config.with_lambda_t(lt * p_c), window, rng)?;
            let n_off = poisson_count(lt * (1.0 - p_c) * window.area(), rng)?;
            let off: Vec<Point> = (0..n_off).map(|_| window.uniform_point(rng)).collect();
            condition_reference_fade(&mut s, channel.eval(active_density), alpha, rng);
            let dias = SchedulerKind::Dias { interferer: *interferer };
            apply_scheduler_with(&mut s, &dias, active_density, alpha, edge, &off, rng)?;
            Ok(s)
        }
        _ => {
            let mut s = sample_network_with(config, window, rng)?;
            if !matches!(scheme, SchedulerKind::None) {
                apply_scheduler_with(&mut s, scheme, active_density, alpha, edge, &[], rng)?;
            }
            Ok(s)
        }
    }
}

fn prepare(config: &NetworkConfig, scheme: &SchedulerKind, active_density: f64, settings: &McSettings) -> Result<Window> {
    config.validate()?;
    scheme.validate()?;
    settings.validate()?;
    if !(active_density.is_finite() && active_density >= 0.0) {
        return Err(Error::param(format!("active density must be finite and >= 0, got {active_density}")));
    }
    if let Some(c) = scheme.channel() {
        if !c.eval(active_density).is_finite() {
            return Err(Error::Degenerate("reference transmitter cannot pass an infinite channel threshold".into()));
        }
    }
    if let Some(i) = scheme.interferer() {
        if i.eval(active_density) == 0.0 {
            return Err(Error::Degenerate("reference transmitter cannot pass a zero interferer threshold".into()));
        }
    }
    let nodes = match (settings.sampling, scheme) {
        (Sampling::Thinned, SchedulerKind::Dcas { .. }) => active_density,
        _ => config.lambda_t,
    };
    settings.check_budget(nodes)?;
    settings.window()
}

/// Active density the scheme settles at for `config.lambda_t`.
pub fn active_density_for(config: &NetworkConfig, scheme: &SchedulerKind) -> Result<f64> {
    match scheme {
        SchedulerKind::None => Ok(config.lambda_t),
        _ => Ok(solve_active_density(scheme, config)?.lambda),
    }
}

/// Outage at the reference receiver with the scheme's thresholds evaluated at
/// `active_density`.
pub fn estimate_outage_at(config: &NetworkConfig, scheme: &SchedulerKind, active_density: f64, settings: &McSettings) -> Result<McEstimate> {
    let window = prepare(config, scheme, active_density, settings)?;
    let hits = count_trials(settings.trials, settings.master_seed, |rng| {
        let s = scheduled_sample(config, scheme, active_density, settings, &window, rng)?;
        let i = interference_at_origin(&s, &s.interference_fades, config.alpha);
        Ok(sir_at_reference(&s, i, config.alpha)?.is_outage(config.beta))
    })?;
    Ok(McEstimate::from_counts(hits, settings.trials))
}

pub fn estimate_outage(config: &NetworkConfig, scheme: &SchedulerKind, settings: &McSettings) -> Result<McEstimate> {
    estimate_outage_at(config, scheme, active_density_for(config, scheme)?, settings)
}

/// Paired outage estimates without and with one pass of interference cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedOutage {
    pub plain: McEstimate,
    pub canceled: McEstimate,
    /// Trials where cancellation produced an outage the plain receiver avoided.
    pub reversals: u64,
    pub canceled_interferers: u64,
}

pub fn estimate_outage_with_ic_at(config: &NetworkConfig, scheme: &SchedulerKind, active_density: f64, settings: &McSettings) -> Result<PairedOutage> {
    let window = prepare(config, scheme, active_density, settings)?;
    let sums = sum_trials(settings.trials, settings.master_seed, 4, |_, rng, row| {
        let s = scheduled_sample(config, scheme, active_density, settings, &window, rng)?;
        let terms: Vec<f64> = (0..s.len())
            .filter(|&j| j != s.reference && s.active[j])
            .map(|j| s.interference_fades[j] * path_gain_sq(s.tx[j].norm_sq(), config.alpha))
            .collect();
        let total: f64 = terms.iter().sum();
        let plain = sir_at_reference(&s, total, config.alpha)?;
        let (residual, canceled) = residual_after_cancellation(&terms, plain.signal, config.beta);
        let ic = sir_at_reference(&s, residual, config.alpha)?;
        let (a, b) = (plain.is_outage(config.beta), ic.is_outage(config.beta));
        row[0] = f64::from(u8::from(a));
        row[1] = f64::from(u8::from(b));
        row[2] = f64::from(u8::from(b && !a));
        row[3] = canceled as f64;
        Ok(())
    })?;
    let n = settings.trials;
    Ok(PairedOutage {
        plain: McEstimate::from_counts(sums[0] as u64, n),
        canceled: McEstimate::from_counts(sums[1] as u64, n),
        reversals: sums[2] as u64,
        canceled_interferers: sums[3] as u64,
    })
}

pub fn estimate_outage_with_ic(config: &NetworkConfig, scheme: &SchedulerKind, settings: &McSettings) -> Result<PairedOutage> {
    estimate_outage_with_ic_at(config, scheme, active_density_for(config, scheme)?, settings)
}

/// Fraction of non-reference transmitters the scheme lets through, scaled by
/// the parent density.
pub fn estimate_active_density(config: &NetworkConfig, scheme: &SchedulerKind, active_density: f64, settings: &McSettings) -> Result<McEstimate> {
    let settings = McSettings { sampling: Sampling::Parent, ..*settings };
    let window = prepare(config, scheme, active_density, &settings)?;
    let sums = sum_trials(settings.trials, settings.master_seed, 2, |_, rng, row| {
        let s = scheduled_sample(config, scheme, active_density, &settings, &window, rng)?;
        row[0] = (s.active_count() - 1) as f64;
        row[1] = (s.len() - 1) as f64;
        Ok(())
    })?;
    // ratio of totals; interval from the binomial on the pooled decisions
    let e = McEstimate::from_counts(sums[0] as u64, sums[1].max(1.0) as u64);
    let k = config.lambda_t;
    Ok(McEstimate { mean: e.mean * k, half_width_99: e.half_width_99 * k, lower: e.lower * k, upper: e.upper * k, trials: settings.trials })
}

/// Empirical `P[I >= x]` for Rayleigh shot noise of a homogeneous PPP.
///
/// Points are sampled on the window; the interference from beyond it is
/// replaced by its mean `2 pi lambda R^(2-alpha) / (alpha-2)`, whose spread is
/// negligible at the radii used.
pub fn estimate_shot_noise_ccdf(density: f64, alpha: f64, x_grid: &[f64], settings: &McSettings) -> Result<Vec<McEstimate>> {
    settings.validate()?;
    if !(alpha > 2.0) {
        return Err(Error::domain(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    if !(density.is_finite() && density >= 0.0) {
        return Err(Error::param(format!("density must be finite and >= 0, got {density}")));
    }
    settings.check_budget(density)?;
    let r = settings.window_radius;
    let r2 = r * r;
    let tail = 2.0 * PI * density * r.powf(2.0 - alpha) / (alpha - 2.0);
    let sums = sum_trials(settings.trials, settings.master_seed, x_grid.len(), |_, rng, row| {
        let n = poisson_count(density * PI * r2, rng)?;
        let mut i = tail;
        for _ in 0..n {
            let h: f64 = Exp1.sample(rng);
            // 1 - U keeps the squared radius away from zero
            i += h * path_gain_sq(r2 * (1.0 - rng.random::<f64>()), alpha);
        }
        for (v, &x) in row.iter_mut().zip(x_grid) {
            *v = f64::from(u8::from(i >= x));
        }
        Ok(())
    })?;
    Ok(sums.iter().map(|&s| McEstimate::from_counts(s as u64, settings.trials)).collect())
}

/// Mean area of the dominant-interferer region given `H0 D0^-alpha >= delta`.
///
/// The fade of the would-be interferer is averaged exactly, leaving
/// `P = exp(-H0 D0^-alpha r^alpha / beta)`; `r^2 = c (u/(1-u))^2` with `u`
/// stratified on `(0, 1)` maps the whole plane, and `H0` is drawn from its
/// conditional law `delta D0^alpha + Exp(1)`.
pub fn estimate_coverage_area(delta: f64, config: &NetworkConfig, settings: &McSettings) -> Result<McEstimate> {
    config.validate()?;
    settings.validate()?;
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::param(format!("threshold must be >= 0, got {delta}")));
    }
    let (a, beta) = (config.alpha, config.beta);
    let c = beta.powf(2.0 / a) * config.distance.moment(2.0);
    let n = settings.trials;
    let sums = sum_trials(n, settings.master_seed, 2, |t, rng, row| {
        let u = (t as f64 + rng.random::<f64>()) / n as f64;
        let d0 = config.distance.sample(rng);
        let e: f64 = Exp1.sample(rng);
        let s = delta + e / d0.powf(a);
        let q = u / (1.0 - u);
        let w = c * q * q;
        let jac = 2.0 * c * q / ((1.0 - u) * (1.0 - u));
        let v = if w.is_finite() { PI * jac * (-s * w.powf(a / 2.0) / beta).exp() } else { 0.0 };
        row[0] = v;
        row[1] = v * v;
        Ok(())
    })?;
    Ok(McEstimate::from_moments(sums[0], sums[1], n))
}

/// `P[H2 D2^-alpha <= rho | H1 D1^-alpha <= rho]` for the nearest and second
/// nearest receivers of a PPP of density `lambda`, on one set of draws for all `rho`.
pub fn estimate_conditional_weakness(rho_grid: &[f64], lambda: f64, alpha: f64, settings: &McSettings) -> Result<Vec<McEstimate>> {
    settings.validate()?;
    if rho_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::param("thresholds must be positive"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("density must be positive, got {lambda}")));
    }
    let m = rho_grid.len();
    let sums = sum_trials(settings.trials, settings.master_seed, 2 * m, |_, rng, row| {
        let e1: f64 = Exp1.sample(rng);
        let e2: f64 = Exp1.sample(rng);
        let (h1, h2): (f64, f64) = (Exp1.sample(rng), Exp1.sample(rng));
        let g1 = h1 * path_gain_sq(e1 / (PI * lambda), alpha);
        let g2 = h2 * path_gain_sq((e1 + e2) / (PI * lambda), alpha);
        for (k, &rho) in rho_grid.iter().enumerate() {
            if g1 <= rho {
                row[k] = 1.0;
                row[m + k] = f64::from(u8::from(g2 <= rho));
            }
        }
        Ok(())
    })?;
    Ok((0..m).map(|k| McEstimate::from_counts(sums[m + k] as u64, sums[k] as u64)).collect())
}
