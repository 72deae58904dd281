//! Property suites behind `sirsched validate`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{
    a_function, asymptotic_ratio, dcas_outage_bounds, dicas_outage_bounds, ic_outage_bounds, invert_outage_for_density,
    outage_bounds_at, shot_noise_ccdf_bounds, Intensity, InversionOptions, RatioScheme, Regime,
};
use crate::config::{DiasLaw, NetworkConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{active_density_for, estimate_outage_at, estimate_outage_with_ic_at, estimate_shot_noise_ccdf, McSettings};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};
use crate::solvers::{solve_active_density, thinning_map, transmission_probs};

/// Seed used when none is given.
pub const PINNED_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    BoundsSandwich,
    Reductions,
    Asymptotics,
    Ic,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::BoundsSandwich, Suite::Reductions, Suite::Asymptotics, Suite::Ic];

    pub fn name(self) -> &'static str {
        match self {
            Suite::BoundsSandwich => "bounds-sandwich",
            Suite::Reductions => "reductions",
            Suite::Asymptotics => "asymptotics",
            Suite::Ic => "ic",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|k| k.name()).collect();
            Error::param(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Outcome of one property; `detail` carries every parameter needed to rerun a failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub property: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(property: impl Into<String>, failures: Vec<String>, summary: String) -> Self {
        let pass = failures.is_empty();
        let detail = if pass { summary } else { failures.join("; ") };
        Check { property: property.into(), pass, detail }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::BoundsSandwich => bounds_sandwich(seed),
        Suite::Reductions => reductions(),
        Suite::Asymptotics => asymptotics(),
        Suite::Ic => ic(seed),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn dcas(rho: f64, gamma: f64) -> SchedulerKind {
    SchedulerKind::Dcas { channel: ThresholdPolicy { rho, exponent: gamma } }
}

fn dias(rho: f64, delta: f64) -> SchedulerKind {
    SchedulerKind::Dias { interferer: ThresholdPolicy { rho, exponent: delta } }
}

fn dicas(rho_c: f64, gamma: f64, rho_i: f64, delta: f64) -> SchedulerKind {
    SchedulerKind::Dicas { channel: ThresholdPolicy { rho: rho_c, exponent: gamma }, interferer: ThresholdPolicy { rho: rho_i, exponent: delta } }
}

/// Scheme families of the three figure presets.
pub fn preset_families() -> Vec<SchedulerKind> {
    vec![
        SchedulerKind::None,
        dcas(1.0, 0.0),
        dcas(1.0, 1.0),
        dcas(1.0, 2.0),
        dias(0.015, 0.2),
        dias(0.015, -0.01),
        dicas(1.0, 1.0, 1.0, 0.6),
    ]
}

/// `x` values at which the homogeneous `A(x)` runs log-evenly from 0.02 to 3.
pub fn shot_noise_grid(density: f64, alpha: f64, points: usize) -> Result<Vec<f64>> {
    let a1 = a_function(1.0, Intensity::Constant(density), alpha)?;
    Ok(log_grid(3.0, 0.02, points).into_iter().map(|a| (a1 / a).powf(alpha / 2.0)).collect())
}

fn bounds_sandwich(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut fails = Vec::new();
    let mut n = 0;
    for (k, &(lambda, alpha)) in [(1e-5, 3.0), (1e-5, 4.0), (1e-4, 3.0), (1e-4, 4.0)].iter().enumerate() {
        let xs = shot_noise_grid(lambda, alpha, 8)?;
        let s = McSettings::new(10_000, 2000.0, seed.wrapping_add(k as u64));
        let est = estimate_shot_noise_ccdf(lambda, alpha, &xs, &s)?;
        for (x, e) in xs.iter().zip(&est) {
            let b = shot_noise_ccdf_bounds(*x, Intensity::Constant(lambda), alpha)?;
            n += 1;
            if !e.overlaps(b.lower, b.upper) {
                fails.push(format!(
                    "lambda={lambda:e} alpha={alpha} x={x:e} seed={} trials=10000: mc {:.4e}±{:.1e} outside [{:.4e}, {:.4e}]",
                    s.master_seed, e.mean, e.half_width_99, b.lower, b.upper
                ));
            }
        }
    }
    out.push(Check::new("shot-noise-ccdf-within-bounds", fails, format!("{n} points")));

    let mut fails = Vec::new();
    let mut n = 0;
    for scheme in preset_families() {
        for (k, &lt) in [1e-5, 1e-4, 1e-3].iter().enumerate() {
            let c = NetworkConfig::baseline(lt);
            let l = active_density_for(&c, &scheme)?;
            if l == 0.0 {
                continue;
            }
            let (b, _) = outage_bounds_at(l, &scheme, &c)?;
            let s = McSettings::new(4000, 480.0, seed.wrapping_add(100 + k as u64));
            let e = estimate_outage_at(&c, &scheme, l, &s)?;
            n += 1;
            if !e.overlaps(b.lower, b.upper) {
                fails.push(format!(
                    "{scheme} lambda_t={lt:e} alpha=4 beta=2 d=8 seed={} trials=4000: mc {:.4e}±{:.1e} outside [{:.4e}, {:.4e}]",
                    s.master_seed, e.mean, e.half_width_99, b.lower, b.upper
                ));
            }
        }
    }
    out.push(Check::new("scheme-outage-within-bounds", fails, format!("{n} points")));
    Ok(out)
}

fn reductions() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let c = NetworkConfig::baseline(0.0);
    let grid = log_grid(1e-6, 1e-2, 20);

    let mut fails = Vec::new();
    for gamma in [0.0, 1.0, 2.0] {
        let p = ThresholdPolicy { rho: 1.0, exponent: gamma };
        for &l in &grid {
            let a = dicas_outage_bounds(l, &c, &p, 1.0)?;
            let b = dcas_outage_bounds(l, &c, &p)?;
            if a != b {
                fails.push(format!("gamma={gamma} lambda={l:e}: dicas {a:?} vs dcas {b:?}"));
            }
        }
    }
    out.push(Check::new("dicas-with-unit-p_i-is-dcas", fails, "20-point grid, gamma in {0, 1, 2}".into()));

    let mut fails = Vec::new();
    for &l in &grid {
        let (a, _) = outage_bounds_at(l, &dcas(0.0, 0.0), &c)?;
        let (b, _) = outage_bounds_at(l, &SchedulerKind::None, &c)?;
        let tol = 1e-12 * b.lower;
        if (a.lower - b.lower).abs() > tol || (a.upper - b.upper).abs() > tol {
            fails.push(format!("lambda={l:e}: dcas(rho=0) [{:e}, {:e}] vs none {:e}", a.lower, a.upper, b.lower));
        }
    }
    out.push(Check::new("zero-channel-threshold-is-unscheduled", fails, "20-point grid".into()));

    let mut fails = Vec::new();
    let (ch, it) = (ThresholdPolicy { rho: 1.0, exponent: 1.0 }, ThresholdPolicy { rho: 1.0, exponent: 0.6 });
    for &lt in &log_grid(1e-5, 1e-2, 20) {
        let cfg = NetworkConfig::baseline(lt);
        for &l in &[lt * 0.1, lt * 0.5] {
            let p_ic = thinning_map(l, &SchedulerKind::Dicas { channel: ch, interferer: it }, &cfg)? / lt;
            let p_c = thinning_map(l, &SchedulerKind::Dcas { channel: ch }, &cfg)? / lt;
            let p_i = thinning_map(l, &SchedulerKind::Dias { interferer: it }, &cfg)? / lt;
            if (p_ic - p_c * p_i).abs() > 1e-12 {
                fails.push(format!("lambda_t={lt:e} lambda={l:e}: p_ic={p_ic:e} p_c*p_i={:e}", p_c * p_i));
            }
        }
    }
    out.push(Check::new("p_ic-is-p_c-times-p_i", fails, "40 points, tolerance 1e-12".into()));

    let mut fails = Vec::new();
    let printed = NetworkConfig { dias_law: DiasLaw::Printed, ..c };
    for rho in [0.1, 1.0, 10.0] {
        let s = dias(rho, 2.0 / c.alpha);
        let ps: Vec<f64> = [1e-5, 1e-4, 1e-3].iter().map(|&l| transmission_probs(l, &s, &printed).map(|p| p.p_i)).collect::<Result<_>>()?;
        if ps.iter().any(|p| (p - ps[0]).abs() > 1e-8) {
            fails.push(format!("rho={rho} delta=2/alpha printed law: p_i {ps:?}"));
        }
    }
    out.push(Check::new("p_i-constant-when-delta-is-two-over-alpha", fails, "printed law, rho in {0.1, 1, 10}".into()));

    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for scheme in preset_families() {
        for &lt in &log_grid(1e-6, 1e-2, 9) {
            let cfg = NetworkConfig::baseline(lt);
            let r = solve_active_density(&scheme, &cfg)?;
            let res = (thinning_map(r.lambda, &scheme, &cfg)? - r.lambda).abs();
            worst = worst.max(res / lt);
            if res >= 1e-10 * lt {
                fails.push(format!("{scheme} lambda_t={lt:e}: lambda={:e} residual {res:e}", r.lambda));
            }
        }
    }
    out.push(Check::new("fixed-point-residual", fails, format!("worst residual/lambda_t {worst:.2e}")));
    Ok(out)
}

/// Sparse-regime cases compared at `epsilon = 1e-3`: label, scheme, law, limit.
pub fn asymptotic_cases() -> Result<Vec<(String, SchedulerKind, DiasLaw, f64)>> {
    let r = |s, a| asymptotic_ratio(s, Regime::Sparse, a);
    Ok(vec![
        ("dcas gamma=1".into(), dcas(1.0, 1.0), DiasLaw::NearestNeighbor, r(RatioScheme::Dcas { gamma: 1.0 }, 4.0)?),
        ("dcas gamma=0 rho=1e-3".into(), dcas(1e-3, 0.0), DiasLaw::NearestNeighbor, r(RatioScheme::Dcas { gamma: 0.0 }, 4.0)?),
        ("dcas gamma=2".into(), dcas(1.0, 2.0), DiasLaw::NearestNeighbor, r(RatioScheme::Dcas { gamma: 2.0 }, 4.0)?),
        ("dias delta=-0.01 rho=0.015".into(), dias(0.015, -0.01), DiasLaw::Printed, r(RatioScheme::Dias { delta: -0.01 }, 4.0)?),
        ("dias delta=1".into(), dias(1.0, 1.0), DiasLaw::Printed, r(RatioScheme::Dias { delta: 1.0 }, 4.0)?),
        (
            "dicas gamma=1 delta=0.6".into(),
            dicas(1.0, 1.0, 1.0, 0.6),
            DiasLaw::Printed,
            r(RatioScheme::Dicas { gamma: 1.0, delta: 0.6 }, 4.0)?,
        ),
    ])
}

fn asymptotics() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (label, scheme, law, limit) in asymptotic_cases()? {
        let c = NetworkConfig { epsilon: 1e-3, dias_law: law, ..NetworkConfig::baseline(0.0) };
        let d = invert_outage_for_density(&scheme, &c, &InversionOptions::default())?;
        let ratio = d.upper / d.lower;
        let rel = (ratio / limit - 1.0).abs();
        let summary = format!("ratio {ratio:.5} limit {limit:.5} rel {rel:.3}");
        let fails = if rel <= 0.1 && !d.censored_lower && !d.censored_upper {
            vec![]
        } else {
            vec![format!("{scheme} alpha=4 beta=2 d=8 epsilon=1e-3 law={law:?}: {summary}")]
        };
        out.push(Check::new(format!("sparse-ratio {label}"), fails, summary));
    }
    Ok(out)
}

fn ic(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut fails = Vec::new();
    let mut n = 0;
    for scheme in preset_families() {
        for &l in &log_grid(1e-6, 3e-3, 12) {
            let c = NetworkConfig::baseline(0.0);
            let (b, probs) = outage_bounds_at(l, &scheme, &c)?;
            if probs.product() == 0.0 {
                continue;
            }
            let icb = ic_outage_bounds(l, &scheme, &c)?;
            n += 1;
            if icb.lower > b.lower || icb.upper > b.upper {
                fails.push(format!("{scheme} lambda={l:e}: ic [{:e}, {:e}] vs plain [{:e}, {:e}]", icb.lower, icb.upper, b.lower, b.upper));
            }
        }
    }
    out.push(Check::new("ic-bounds-below-plain-bounds", fails, format!("{n} points")));

    let mut fails = Vec::new();
    let mut trials = 0;
    for scheme in preset_families() {
        for (k, &lt) in [1e-5, 1e-4, 1e-3].iter().enumerate() {
            let c = NetworkConfig::baseline(lt);
            let l = active_density_for(&c, &scheme)?;
            let s = McSettings::new(2000, 480.0, seed.wrapping_add(200 + k as u64));
            let p = estimate_outage_with_ic_at(&c, &scheme, l, &s)?;
            trials += s.trials;
            if p.reversals > 0 {
                fails.push(format!("{scheme} lambda_t={lt:e} seed={} trials=2000: {} reversals", s.master_seed, p.reversals));
            }
        }
    }
    out.push(Check::new("ic-never-hurts-paired-trials", fails, format!("{trials} paired trials")));

    let mut fails = Vec::new();
    let sparse_dense = |scheme: &SchedulerKind| -> Result<(f64, f64)> {
        let c = NetworkConfig::baseline(0.0);
        let gain = |lt: f64| -> Result<f64> {
            let cfg = c.with_lambda_t(lt);
            let l = active_density_for(&cfg, scheme)?;
            Ok(1.0 - ic_outage_bounds(l, scheme, &cfg)?.lower / outage_bounds_at(l, scheme, &cfg)?.0.lower)
        };
        Ok((gain(1e-5)?, gain(1e-3)?))
    };
    for scheme in [dias(0.015, 0.2), dias(0.015, -0.01)] {
        let (s, d) = sparse_dense(&scheme)?;
        if s <= d {
            fails.push(format!("{scheme}: reduction at lambda_t=1e-5 {s:.4} not above lambda_t=1e-3 {d:.4}"));
        }
    }
    out.push(Check::new("dias-ic-gain-larger-when-sparse", fails, "lower-bound reduction at lambda_t 1e-5 vs 1e-3".into()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn reductions_pass() {
        let checks = run_suite(Suite::Reductions, PINNED_SEED).unwrap();
        for c in &checks {
            assert!(c.pass, "{}: {}", c.property, c.detail);
        }
        assert_eq!(checks.len(), 5);
    }

    #[test]
    fn shot_noise_grid_spans_the_bounds() {
        let xs = shot_noise_grid(1e-4, 4.0, 8).unwrap();
        let lo = shot_noise_ccdf_bounds(xs[0], Intensity::Constant(1e-4), 4.0).unwrap();
        let hi = shot_noise_ccdf_bounds(xs[7], Intensity::Constant(1e-4), 4.0).unwrap();
        assert!(lo.lower > 0.9 && hi.upper < 0.05);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }
}
