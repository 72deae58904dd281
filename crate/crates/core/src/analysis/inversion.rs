use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::analysis::{ic_outage_bounds, outage_bounds_at, transmission_capacity, OutageBounds};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::schedulers::SchedulerKind;

/// Which outage bound a density is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSelector {
    Lower,
    Upper,
}

impl BoundSelector {
    pub fn pick(self, b: &OutageBounds) -> f64 {
        match self {
            BoundSelector::Lower => b.lower,
            BoundSelector::Upper => b.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid_points: usize,
    pub refine_points: usize,
    pub refine_passes: usize,
    pub rel_tol: f64,
    /// Use the interference-cancellation bounds.
    pub cancellation: bool,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            lambda_min: 1e-12,
            lambda_max: 1.0,
            grid_points: 512,
            refine_points: 64,
            refine_passes: 2,
            rel_tol: 1e-13,
            cancellation: false,
        }
    }
}

/// Largest admissible density read from each bound, with the matching capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBounds {
    /// From the upper outage bound.
    pub lower: f64,
    /// From the lower outage bound.
    pub upper: f64,
    pub tc_lower: f64,
    pub tc_upper: f64,
    pub censored_lower: bool,
    pub censored_upper: bool,
}

/// Supremum of `{lambda in [lambda_min, lambda_max] : q(lambda) <= epsilon}`,
/// where `q` returns `None` for densities no parent density can produce.
/// The flag is set when the supremum sits at `lambda_max` or at the edge of
/// the reachable range rather than where the outage constraint binds.
pub fn sup_density_below<F: FnMut(f64) -> Result<Option<f64>>>(mut q: F, epsilon: f64, opts: &InversionOptions) -> Result<(f64, bool)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let (lo, hi) = (opts.lambda_min, opts.lambda_max);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param(format!("density search range must satisfy 0 < min < max, got [{lo}, {hi}]")));
    }
    if opts.grid_points < 2 || opts.refine_points < 2 {
        return Err(Error::param("density search grids need at least two points"));
    }
    let log_grid = |a: f64, b: f64, n: usize| -> Vec<f64> {
        let (la, lb) = (a.ln(), b.ln());
        (0..n).map(|k| if k + 1 == n { b } else { (la + (lb - la) * k as f64 / (n - 1) as f64).exp() }).collect()
    };
    // Some(true): admissible, Some(false): outage too high, None: unreachable.
    let mut admit = |l: f64| -> Result<Option<bool>> { Ok(q(l)?.map(|v| v <= epsilon)) };

    let mut grid = log_grid(lo, hi, opts.grid_points);
    let mut last = None;
    for (k, &l) in grid.iter().enumerate() {
        if admit(l)? == Some(true) {
            last = Some(k);
        }
    }
    let Some(mut k) = last else { return Ok((0.0, false)) };
    if k + 1 == grid.len() {
        return Ok((hi, true));
    }
    for _ in 0..opts.refine_passes {
        let fine = log_grid(grid[k], grid[k + 1], opts.refine_points);
        let mut j = 0;
        for (i, &l) in fine.iter().enumerate().skip(1) {
            if admit(l)? == Some(true) {
                j = i;
            }
        }
        if j + 1 == fine.len() {
            j -= 1;
        }
        grid = fine;
        k = j;
    }
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    let mut b_state = admit(b)?;
    while b - a > opts.rel_tol * b {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        match admit(m)? {
            Some(true) => a = m,
            state => {
                b = m;
                b_state = state;
            }
        }
    }
    Ok((a, b_state.is_none()))
}

/// Bound evaluations shared by inversions of one scheme that differ only in
/// the outage target or the selected bound.
#[derive(Debug, Default)]
pub struct BoundMemo {
    map: Mutex<HashMap<u64, Option<OutageBounds>>>,
}

/// Outage bounds at active density `l`, or `None` when no parent density produces it.
fn reachable_bounds(l: f64, scheme: &SchedulerKind, config: &NetworkConfig, opts: &InversionOptions) -> Result<Option<OutageBounds>> {
    let (b, probs) = outage_bounds_at(l, scheme, config)?;
    if probs.product() == 0.0 {
        return Ok(None);
    }
    Ok(Some(if opts.cancellation { ic_outage_bounds(l, scheme, config)? } else { b }))
}

/// Largest active density whose selected outage bound stays within `config.epsilon`.
pub fn max_contention_density(selector: BoundSelector, scheme: &SchedulerKind, config: &NetworkConfig, opts: &InversionOptions) -> Result<(f64, bool)> {
    max_contention_density_memo(selector, scheme, config, opts, &BoundMemo::default())
}

/// As [`max_contention_density`], reusing and filling `memo`, which must only
/// ever see this scheme, network and option set.
pub fn max_contention_density_memo(
    selector: BoundSelector,
    scheme: &SchedulerKind,
    config: &NetworkConfig,
    opts: &InversionOptions,
    memo: &BoundMemo,
) -> Result<(f64, bool)> {
    config.validate()?;
    scheme.validate()?;
    sup_density_below(
        |l| {
            let hit = memo.map.lock().map_err(|_| Error::Contract("bound memo poisoned".into()))?.get(&l.to_bits()).copied();
            let b = match hit {
                Some(b) => b,
                None => {
                    let b = reachable_bounds(l, scheme, config, opts)?;
                    memo.map.lock().map_err(|_| Error::Contract("bound memo poisoned".into()))?.insert(l.to_bits(), b);
                    b
                }
            };
            Ok(b.map(|b| selector.pick(&b)))
        },
        config.epsilon,
        opts,
    )
}

/// Density and capacity bounds of `scheme` at the configured outage constraint.
pub fn invert_outage_for_density(scheme: &SchedulerKind, config: &NetworkConfig, opts: &InversionOptions) -> Result<DensityBounds> {
    invert_outage_for_density_memo(scheme, config, opts, &BoundMemo::default())
}

pub fn invert_outage_for_density_memo(scheme: &SchedulerKind, config: &NetworkConfig, opts: &InversionOptions, memo: &BoundMemo) -> Result<DensityBounds> {
    let (upper, censored_upper) = max_contention_density_memo(BoundSelector::Lower, scheme, config, opts, memo)?;
    let (lower, censored_lower) = max_contention_density_memo(BoundSelector::Upper, scheme, config, opts, memo)?;
    Ok(DensityBounds {
        lower,
        upper,
        tc_lower: transmission_capacity(lower, config.epsilon, config.rate_b),
        tc_upper: transmission_capacity(upper, config.epsilon, config.rate_b),
        censored_lower,
        censored_upper,
    })
}
