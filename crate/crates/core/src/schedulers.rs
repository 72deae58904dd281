//! Threshold scheduling rules and their application to a network sample.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::channel::path_gain;
use crate::error::{Error, Result};
use crate::geometry::{NetworkSample, Point, Window};

/// Threshold `rho * lambda^exponent` as a function of the active density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    pub rho: f64,
    pub exponent: f64,
}

impl ThresholdPolicy {
    pub fn new(rho: f64, exponent: f64) -> Result<Self> {
        let p = ThresholdPolicy { rho, exponent };
        p.validate()?;
        Ok(p)
    }

    /// Fixed threshold `rho`.
    pub fn fixed(rho: f64) -> Self {
        ThresholdPolicy { rho, exponent: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.is_nan() || self.rho < 0.0 {
            return Err(Error::param(format!("threshold scale must be >= 0, got {}", self.rho)));
        }
        if !self.exponent.is_finite() {
            return Err(Error::param(format!("threshold exponent must be finite, got {}", self.exponent)));
        }
        Ok(())
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        if self.rho == 0.0 {
            0.0
        } else if self.exponent == 0.0 {
            self.rho
        } else {
            self.rho * lambda.powf(self.exponent)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchedulerKind {
    None,
    Dcas { channel: ThresholdPolicy },
    Dias { interferer: ThresholdPolicy },
    Dicas { channel: ThresholdPolicy, interferer: ThresholdPolicy },
}

impl SchedulerKind {
    pub fn channel(&self) -> Option<&ThresholdPolicy> {
        match self {
            SchedulerKind::Dcas { channel } | SchedulerKind::Dicas { channel, .. } => Some(channel),
            _ => None,
        }
    }

    pub fn interferer(&self) -> Option<&ThresholdPolicy> {
        match self {
            SchedulerKind::Dias { interferer } | SchedulerKind::Dicas { interferer, .. } => Some(interferer),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.channel() {
            p.validate()?;
        }
        if let Some(p) = self.interferer() {
            p.validate()?;
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::None => "none",
            SchedulerKind::Dcas { .. } => "dcas",
            SchedulerKind::Dias { .. } => "dias",
            SchedulerKind::Dicas { .. } => "dicas",
        }
    }

    /// Same scheme with the exponent of its primary threshold replaced.
    pub fn with_exponent(&self, exponent: f64) -> Self {
        let mut k = *self;
        match &mut k {
            SchedulerKind::None => {}
            SchedulerKind::Dcas { channel } | SchedulerKind::Dicas { channel, .. } => channel.exponent = exponent,
            SchedulerKind::Dias { interferer } => interferer.exponent = exponent,
        }
        k
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerKind::None => write!(f, "none"),
            SchedulerKind::Dcas { channel: c } => write!(f, "dcas(rho={},gamma={})", c.rho, c.exponent),
            SchedulerKind::Dias { interferer: i } => write!(f, "dias(rho={},delta={})", i.rho, i.exponent),
            SchedulerKind::Dicas { channel: c, interferer: i } => write!(
                f,
                "dicas(rho_c={},gamma={};rho_i={},delta={})",
                c.rho, c.exponent, i.rho, i.exponent
            ),
        }
    }
}

/// Transmit iff `h * d^-alpha >= threshold`.
pub fn dcas_decision(h: f64, d: f64, threshold: f64, alpha: f64) -> bool {
    h * path_gain(d, alpha) >= threshold
}

/// Transmit iff `h * d^-alpha <= threshold`, `d` being the distance to the
/// nearest unintended receiver.
pub fn dias_decision(h: f64, d: f64, threshold: f64, alpha: f64) -> bool {
    h * path_gain(d, alpha) <= threshold
}

#[allow(clippy::too_many_arguments)]
pub fn dicas_decision(h: f64, d: f64, h_i: f64, d_i: f64, threshold_c: f64, threshold_i: f64, alpha: f64) -> bool {
    dcas_decision(h, d, threshold_c, alpha) && dias_decision(h_i, d_i, threshold_i, alpha)
}

/// Receiver nearest to transmitter `tx_index` other than its own, by exhaustive
/// search. Ties go to the lowest index.
pub fn nearest_unintended_receiver(sample: &NetworkSample, tx_index: usize) -> Result<(usize, f64)> {
    let x = sample.tx.get(tx_index).ok_or_else(|| Error::param(format!("no transmitter {tx_index}")))?;
    let mut best: Option<(usize, f64)> = None;
    for (k, y) in sample.rx.iter().enumerate() {
        if k == tx_index {
            continue;
        }
        let d2 = x.dist_sq(y);
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((k, d2));
        }
    }
    best.map(|(k, d2)| (k, d2.sqrt())).ok_or(Error::NoNeighbor(tx_index))
}

/// Owner value for receivers that belong to no sampled transmitter.
pub const NO_OWNER: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub pos: Point,
    pub owner: u32,
    pub ghost: bool,
}

/// Uniform grid over candidate receivers for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct ReceiverIndex {
    cands: Vec<Candidate>,
    order: Vec<u32>,
    starts: Vec<u32>,
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
}

const MAX_CELLS: usize = 1 << 22;

impl ReceiverIndex {
    /// `half_extent` forces the grid to cover `[-half_extent, half_extent]^2`
    /// so that queries inside that box start in their own cell.
    pub fn build(cands: Vec<Candidate>, half_extent: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (-half_extent, -half_extent, half_extent, half_extent);
        for c in &cands {
            x0 = x0.min(c.pos.x);
            y0 = y0.min(c.pos.y);
            x1 = x1.max(c.pos.x);
            y1 = y1.max(c.pos.y);
        }
        let w = (x1 - x0).max(1e-9);
        let h = (y1 - y0).max(1e-9);
        let n = cands.len().max(1) as f64;
        let mut cell = (w * h / n).sqrt().max(1e-9);
        while ((w / cell).ceil() * (h / cell).ceil()) as usize > MAX_CELLS {
            cell *= 1.5;
        }
        let nx = ((w / cell).floor() as usize + 1).max(1);
        let ny = ((h / cell).floor() as usize + 1).max(1);
        let mut counts = vec![0u32; nx * ny + 1];
        let cell_of = |p: &Point| {
            let i = (((p.x - x0) / cell) as usize).min(nx - 1);
            let j = (((p.y - y0) / cell) as usize).min(ny - 1);
            j * nx + i
        };
        for c in &cands {
            counts[cell_of(&c.pos) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; cands.len()];
        for (idx, c) in cands.iter().enumerate() {
            let slot = &mut fill[cell_of(&c.pos)];
            order[*slot as usize] = idx as u32;
            *slot += 1;
        }
        ReceiverIndex { cands, order, starts: counts, x0, y0, cell, nx, ny }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.cands
    }

    /// Nearest candidate not owned by `exclude`, as (candidate index, distance).
    /// Ties go to the lowest candidate index.
    pub fn nearest(&self, q: &Point, exclude: u32) -> Option<(usize, f64)> {
        let ci = (((q.x - self.x0) / self.cell).max(0.0) as usize).min(self.nx - 1) as isize;
        let cj = (((q.y - self.y0) / self.cell).max(0.0) as usize).min(self.ny - 1) as isize;
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.nx.max(self.ny) as isize;
        let visit = |i: isize, j: isize, best: &mut Option<(usize, f64)>| {
            if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                return;
            }
            let c = j as usize * self.nx + i as usize;
            for &idx in &self.order[self.starts[c] as usize..self.starts[c + 1] as usize] {
                let cand = &self.cands[idx as usize];
                if cand.owner == exclude {
                    continue;
                }
                let d2 = q.dist_sq(&cand.pos);
                let better = match *best {
                    None => true,
                    Some((bi, bd)) => d2 < bd || (d2 == bd && (idx as usize) < bi),
                };
                if better {
                    *best = Some((idx as usize, d2));
                }
            }
        };
        for k in 0..=max_ring {
            if k == 0 {
                visit(ci, cj, &mut best);
            } else {
                for t in -k..=k {
                    visit(ci + t, cj - k, &mut best);
                    visit(ci + t, cj + k, &mut best);
                }
                for t in (-k + 1)..k {
                    visit(ci - k, cj + t, &mut best);
                    visit(ci + k, cj + t, &mut best);
                }
            }
            if let Some((_, d2)) = best {
                let reach = k as f64 * self.cell;
                if d2 < reach * reach {
                    break;
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// Candidate receivers: every receiver of `sample`, then `extra` unowned
/// receivers, then mirror images of those within `band` inside the boundary
/// of `edge` reflected radially outward.
pub fn candidate_receivers(sample: &NetworkSample, extra: &[Point], edge: Option<(&Window, f64)>) -> Vec<Candidate> {
    let mut cands: Vec<Candidate> = sample
        .rx
        .iter()
        .enumerate()
        .map(|(k, &pos)| Candidate { pos, owner: k as u32, ghost: false })
        .chain(extra.iter().map(|&pos| Candidate { pos, owner: NO_OWNER, ghost: false }))
        .collect();
    if let Some((w, band)) = edge {
        let r = w.radius();
        let inner = (r - band).max(0.0);
        let ghosts: Vec<Candidate> = cands
            .iter()
            .filter_map(|c| {
                let rho = c.pos.norm();
                (rho >= inner && rho <= r && rho > 0.0).then(|| {
                    let s = (2.0 * r - rho) / rho;
                    Candidate { pos: Point::new(c.pos.x * s, c.pos.y * s), owner: c.owner, ghost: true }
                })
            })
            .collect();
        cands.extend(ghosts);
    }
    cands
}

/// Width of the boundary band searched through mirror images: four mean
/// nearest-neighbour spacings plus the longest link.
pub fn edge_band(receiver_density: f64, max_link: f64, window: &Window) -> f64 {
    let spacing = if receiver_density > 0.0 { 0.5 / receiver_density.sqrt() } else { window.radius() };
    (4.0 * spacing + max_link).min(window.radius())
}

/// Redraws the reference signal fade from its law given `H D^-alpha >= threshold`.
pub fn condition_reference_fade<R: Rng + ?Sized>(sample: &mut NetworkSample, threshold: f64, alpha: f64, rng: &mut R) {
    let r = sample.reference;
    let d0 = sample.link_distances[r];
    if !dcas_decision(sample.signal_fades[r], d0, threshold, alpha) {
        let e: f64 = Exp1.sample(rng);
        sample.signal_fades[r] = threshold / path_gain(d0, alpha) + e;
    }
}

/// Sets the activity flags of `sample` for `kind` at the given active density.
///
/// The reference pair is conditioned on passing its own tests: its signal
/// fade is redrawn from the law of `H` given `H D^-alpha >= Delta_c`, which by
/// memorylessness is `Delta_c D^alpha + Exp(1)`. Interferers whose nearest
/// unintended receiver is the reference receiver reuse the fade of that link.
/// `extra_receivers` are receivers of pairs removed before sampling.
pub fn apply_scheduler_with<R: Rng + ?Sized>(
    sample: &mut NetworkSample,
    kind: &SchedulerKind,
    active_density: f64,
    alpha: f64,
    edge: Option<&Window>,
    extra_receivers: &[Point],
    rng: &mut R,
) -> Result<()> {
    kind.validate()?;
    let r = sample.reference;
    let n = sample.len();
    sample.active.iter_mut().for_each(|a| *a = true);

    if let Some(policy) = kind.channel() {
        let th = policy.eval(active_density);
        if !th.is_finite() {
            return Err(Error::Degenerate(format!("channel threshold is {th}")));
        }
        condition_reference_fade(sample, th, alpha, rng);
        for j in 0..n {
            if j != r {
                sample.active[j] = dcas_decision(sample.signal_fades[j], sample.link_distances[j], th, alpha);
            }
        }
    }

    if let Some(policy) = kind.interferer() {
        let th = policy.eval(active_density);
        if th == 0.0 {
            return Err(Error::Degenerate("interferer threshold is zero".into()));
        }
        if th.is_infinite() {
            return Ok(());
        }
        let band = edge.map(|w| {
            let density = (n + extra_receivers.len()) as f64 / w.area();
            let max_link = sample.link_distances.iter().cloned().fold(0.0, f64::max);
            (w, edge_band(density, max_link, w))
        });
        let cands = candidate_receivers(sample, extra_receivers, band);
        let extent = edge.map_or(0.0, |w| w.radius());
        let index = ReceiverIndex::build(cands, extent);
        for j in 0..n {
            if j == r || !sample.active[j] {
                continue;
            }
            let Some((ci, d)) = index.nearest(&sample.tx[j], j as u32) else { continue };
            let c = index.candidates()[ci];
            let fade = if c.owner == r as u32 && !c.ghost {
                sample.interference_fades[j]
            } else {
                Exp1.sample(rng)
            };
            sample.active[j] = dias_decision(fade, d, th, alpha);
        }
    }
    Ok(())
}

pub fn apply_scheduler(
    sample: &mut NetworkSample,
    kind: &SchedulerKind,
    active_density: f64,
    alpha: f64,
    edge: Option<&Window>,
    seed: u64,
) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    apply_scheduler_with(sample, kind, active_density, alpha, edge, &[], &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;
    use crate::geometry::{sample_network, substream};

    #[test]
    fn decisions_follow_thresholds() {
        assert!(dcas_decision(1.0, 1.0, 1.0, 4.0));
        assert!(!dcas_decision(0.5, 1.0, 1.0, 4.0));
        assert!(dias_decision(1.0, 2.0, 1.0 / 16.0, 4.0));
        assert!(!dias_decision(1.1, 2.0, 1.0 / 16.0, 4.0));
        assert!(dias_decision(5.0, 1.0, f64::INFINITY, 4.0));
        assert!(!dicas_decision(1.0, 1.0, 1.0, 1.0, 2.0, 10.0, 4.0));
    }

    #[test]
    fn policy_evaluation() {
        let p = ThresholdPolicy::new(2.0, 0.5).unwrap();
        assert!((p.eval(1e-4) - 0.02).abs() < 1e-15);
        assert_eq!(ThresholdPolicy::fixed(0.0).eval(0.0), 0.0);
        assert!(ThresholdPolicy::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn grid_matches_exhaustive_search() {
        let c = NetworkConfig::baseline(2e-3);
        let w = Window::new(150.0).unwrap();
        for seed in 0..5 {
            let s = sample_network(&c, &w, seed).unwrap();
            let index = ReceiverIndex::build(candidate_receivers(&s, &[], None), w.radius());
            for j in 0..s.len() {
                let (k, d) = nearest_unintended_receiver(&s, j).unwrap();
                let (ci, dg) = index.nearest(&s.tx[j], j as u32).unwrap();
                assert_eq!(index.candidates()[ci].owner as usize, k);
                assert_eq!(d, dg);
            }
        }
    }

    #[test]
    fn lone_transmitter_has_no_neighbor() {
        let c = NetworkConfig::baseline(0.0);
        let s = sample_network(&c, &Window::new(50.0).unwrap(), 1).unwrap();
        assert!(matches!(nearest_unintended_receiver(&s, 0), Err(Error::NoNeighbor(0))));
    }

    #[test]
    fn reference_is_always_scheduled() {
        let c = NetworkConfig::baseline(1e-3);
        let w = Window::new(200.0).unwrap();
        let kind = SchedulerKind::Dicas {
            channel: ThresholdPolicy::fixed(1e-3),
            interferer: ThresholdPolicy::fixed(1e-3),
        };
        for seed in 0..20 {
            let mut s = sample_network(&c, &w, seed).unwrap();
            let mut rng = substream(seed, 1);
            apply_scheduler_with(&mut s, &kind, 1e-4, 4.0, Some(&w), &[], &mut rng).unwrap();
            assert!(s.active[0]);
            assert!(s.signal_fades[0] * 8f64.powi(-4) >= 1e-3);
        }
    }

    #[test]
    fn dcas_acceptance_rate() {
        // P[H d^-4 >= Delta] = exp(-Delta d^4)
        let c = NetworkConfig::baseline(5e-3);
        let w = Window::new(250.0).unwrap();
        let kind = SchedulerKind::Dcas { channel: ThresholdPolicy::fixed(1e-4) };
        let (mut on, mut total) = (0usize, 0usize);
        for seed in 0..40 {
            let mut s = sample_network(&c, &w, seed).unwrap();
            apply_scheduler(&mut s, &kind, 0.0, 4.0, Some(&w), seed).unwrap();
            on += s.active_count() - 1;
            total += s.len() - 1;
        }
        let p = (-1e-4 * 4096.0f64).exp();
        let rate = on as f64 / total as f64;
        let se = (p * (1.0 - p) / total as f64).sqrt();
        assert!((rate - p).abs() < 4.0 * se, "rate {rate} vs {p}");
    }

    #[test]
    fn scheme_serde_round_trip() {
        let k = SchedulerKind::Dicas { channel: ThresholdPolicy::fixed(1.0), interferer: ThresholdPolicy::new(1.0, 0.6).unwrap() };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<SchedulerKind>(&s).unwrap(), k);
        assert!(serde_json::from_str::<SchedulerKind>(r#"{"kind":"dcas"}"#).is_err());
    }
}
