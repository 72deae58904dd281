//! Declarative sweeps over densities, outage targets or threshold exponents.

mod output;
mod presets;

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    invert_outage_for_density, invert_outage_for_density_memo, outage_bounds_at, transmission_capacity, BoundMemo, DensityBounds,
    InversionOptions,
};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{active_density_for, estimate_outage_at, McEstimate, McSettings, Sampling};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};
use crate::solvers::{parent_density, transmission_probs};

pub use output::{
    emit_plot_script, emit_results, plot_script, read_results_csv, read_results_json, results_csv, results_json, Format,
    ResultsDocument, CSV_COLUMNS,
};
pub use presets::{preset, preset_names, PRESETS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Artifact {
    Csv,
    Json,
    Plot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Parent density `lambda_t`.
    LambdaT,
    /// Outage target.
    Epsilon,
    /// Exponent of each scheme's primary threshold.
    Exponent,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::LambdaT => "lambda-t",
            SweepVariable::Epsilon => "epsilon",
            SweepVariable::Exponent => "exponent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeTag {
    None,
    Dcas,
    Dias,
    Dicas,
}

/// One `[[schemes]]` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: SchemeTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ThresholdPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferer: Option<ThresholdPolicy>,
}

impl SchemeSpec {
    pub fn scheduler(&self) -> std::result::Result<SchedulerKind, String> {
        let (c, i) = (self.channel, self.interferer);
        match (self.kind, c, i) {
            (SchemeTag::None, None, None) => Ok(SchedulerKind::None),
            (SchemeTag::Dcas, Some(channel), None) => Ok(SchedulerKind::Dcas { channel }),
            (SchemeTag::Dias, None, Some(interferer)) => Ok(SchedulerKind::Dias { interferer }),
            (SchemeTag::Dicas, Some(channel), Some(interferer)) => Ok(SchedulerKind::Dicas { channel, interferer }),
            (kind, _, _) => {
                let need = match kind {
                    SchemeTag::None => "no thresholds",
                    SchemeTag::Dcas => "`channel` only",
                    SchemeTag::Dias => "`interferer` only",
                    SchemeTag::Dicas => "both `channel` and `interferer`",
                };
                Err(format!("{} takes {need}", kind_name(kind)))
            }
        }
    }

    pub fn display_label(&self) -> String {
        match (&self.label, self.scheduler()) {
            (Some(l), _) => l.clone(),
            (None, Ok(k)) => k.to_string(),
            (None, Err(_)) => kind_name(self.kind).to_string(),
        }
    }
}

fn kind_name(kind: SchemeTag) -> &'static str {
    match kind {
        SchemeTag::None => "none",
        SchemeTag::Dcas => "dcas",
        SchemeTag::Dias => "dias",
        SchemeTag::Dicas => "dicas",
    }
}

/// Active-density grid on which Monte Carlo outage is tabulated for `epsilon` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub density_min: f64,
    pub density_max: f64,
    pub points: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { density_min: 1e-5, density_max: 1e-2, points: 19 }
    }
}

impl Calibration {
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.density_min.ln(), self.density_max.ln());
        let n = self.points;
        (0..n).map(|k| if k + 1 == n { self.density_max } else { (a + (b - a) * k as f64 / (n - 1) as f64).exp() }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub config: NetworkConfig,
    pub schemes: Vec<SchemeSpec>,
    pub sweep: Sweep,
    pub mc: McSettings,
    #[serde(default)]
    pub calibration: Calibration,
    pub outputs: Vec<Artifact>,
}

impl ExperimentSpec {
    /// Parses and validates a TOML spec.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string().trim_end().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Every problem found, one `field: message` entry each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |field: &str, msg: String| out.push(format!("{field}: {msg}"));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            bad("name", format!("must be a nonempty [A-Za-z0-9_-] identifier, got {:?}", self.name));
        }
        if let Err(e) = self.config.validate() {
            bad("config", e.to_string());
        }
        if self.schemes.is_empty() {
            bad("schemes", "at least one scheme is required".into());
        }
        let mut labels = HashSet::new();
        for (k, s) in self.schemes.iter().enumerate() {
            match s.scheduler() {
                Ok(kind) => {
                    if let Err(e) = kind.validate() {
                        bad(&format!("schemes[{k}]"), e.to_string());
                    }
                    if self.sweep.variable == SweepVariable::Exponent && kind == SchedulerKind::None {
                        bad(&format!("schemes[{k}]"), "an exponent sweep needs a thresholded scheme".into());
                    }
                }
                Err(e) => bad(&format!("schemes[{k}]"), e),
            }
            if !labels.insert(s.display_label()) {
                bad(&format!("schemes[{k}].label"), format!("duplicate label {:?}", s.display_label()));
            }
        }
        let g = &self.sweep.grid;
        if g.is_empty() {
            bad("sweep.grid", "must not be empty".into());
        }
        if g.iter().any(|v| !v.is_finite()) {
            bad("sweep.grid", "values must be finite".into());
        } else if g.windows(2).any(|w| w[1] <= w[0]) {
            bad("sweep.grid", "must be strictly increasing".into());
        }
        match self.sweep.variable {
            SweepVariable::LambdaT if g.iter().any(|&v| !(v >= 0.0)) => bad("sweep.grid", "densities must be >= 0".into()),
            SweepVariable::Epsilon if g.iter().any(|&v| !(v > 0.0 && v < 1.0)) => {
                bad("sweep.grid", "outage targets must lie in (0, 1)".into())
            }
            _ => {}
        }
        if let Err(e) = self.mc.validate() {
            bad("mc", e.to_string());
        }
        let c = &self.calibration;
        if !(c.density_min > 0.0 && c.density_max > c.density_min && c.density_max.is_finite() && c.points >= 2) {
            bad("calibration", "needs 0 < density_min < density_max and at least two points".into());
        }
        if self.outputs.is_empty() {
            bad("outputs", "at least one artifact is required".into());
        }
        if self.outputs.iter().collect::<HashSet<_>>().len() != self.outputs.len() {
            bad("outputs", "artifacts must not repeat".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Spec(p.join("; ")))
        }
    }

    /// Schedulers in spec order with their labels.
    pub fn schedulers(&self) -> Result<Vec<(String, SchedulerKind)>> {
        self.schemes
            .iter()
            .map(|s| s.scheduler().map(|k| (s.display_label(), k)).map_err(Error::Spec))
            .collect()
    }
}

/// One (grid point, scheme) outcome. Densities are per m^2; capacities are
/// bits/s/Hz per m^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub index: usize,
    pub sweep_value: f64,
    pub scheme: String,
    pub lambda_t: Option<f64>,
    pub active_density: Option<f64>,
    pub outage_lower: Option<f64>,
    pub outage_upper: Option<f64>,
    pub clamped: bool,
    pub mc_outage: Option<f64>,
    pub mc_ci99: Option<f64>,
    pub mc_trials: u64,
    /// The Monte Carlo interval misses the bound band.
    pub violation: bool,
    pub density_lower: Option<f64>,
    pub density_upper: Option<f64>,
    pub tc_lower: Option<f64>,
    pub tc_upper: Option<f64>,
    /// A density bound sits at the search edge instead of where the outage constraint binds.
    pub censored: bool,
    pub density_mc: Option<f64>,
    pub tc_mc: Option<f64>,
    pub mc_censored: bool,
    pub status: String,
    /// Wall time in seconds; kept out of CSV so files stay byte-stable.
    #[serde(default)]
    pub runtime_s: f64,
}

impl ResultRow {
    pub fn new(index: usize, sweep_value: f64, scheme: &str) -> Self {
        ResultRow {
            index,
            sweep_value,
            scheme: scheme.to_string(),
            lambda_t: None,
            active_density: None,
            outage_lower: None,
            outage_upper: None,
            clamped: false,
            mc_outage: None,
            mc_ci99: None,
            mc_trials: 0,
            violation: false,
            density_lower: None,
            density_upper: None,
            tc_lower: None,
            tc_upper: None,
            censored: false,
            density_mc: None,
            tc_mc: None,
            mc_censored: false,
            status: "ok".into(),
            runtime_s: 0.0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn set_inversion(&mut self, d: &DensityBounds) {
        self.density_lower = Some(d.lower);
        self.density_upper = Some(d.upper);
        self.tc_lower = Some(d.tc_lower);
        self.tc_upper = Some(d.tc_upper);
        self.censored = d.censored_lower || d.censored_upper;
    }

    fn set_bounds(&mut self, lambda: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<()> {
        let (b, _) = outage_bounds_at(lambda, scheme, config)?;
        self.outage_lower = Some(b.lower);
        self.outage_upper = Some(b.upper);
        self.clamped = b.clamped;
        Ok(())
    }

    fn set_mc(&mut self, mean: f64, half_width: f64, trials: u64) {
        self.mc_outage = Some(mean);
        self.mc_ci99 = Some(half_width);
        self.mc_trials = trials;
        if let (Some(lo), Some(hi)) = (self.outage_lower, self.outage_upper) {
            self.violation = mean + half_width < lo || mean - half_width > hi;
        }
    }
}

/// Monte Carlo outage tabulated on an active-density grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub points: Vec<(f64, McEstimate)>,
    /// The grid stopped early at an unreachable density or the sampling budget.
    pub truncated: bool,
}

/// Largest density whose estimated outage stays within `epsilon`, with the
/// estimate interpolated there (linearly in the density) and a censoring flag.
pub fn calibrated_density(curve: &CalibrationCurve, epsilon: f64) -> (f64, f64, f64, bool) {
    let pts = &curve.points;
    let Some(k) = pts.iter().rposition(|(_, q)| q.mean <= epsilon) else {
        return match pts.first() {
            // outage grows linearly in the density below the grid
            Some(&(d, q)) if q.mean > 0.0 => (d * epsilon / q.mean, epsilon, q.half_width_99 * epsilon / q.mean, false),
            _ => (0.0, 0.0, 0.0, true),
        };
    };
    let (d0, q0) = pts[k];
    if k + 1 == pts.len() {
        return (d0, q0.mean, q0.half_width_99, true);
    }
    let (d1, q1) = pts[k + 1];
    let t = (epsilon - q0.mean) / (q1.mean - q0.mean);
    (d0 + t * (d1 - d0), epsilon, q0.half_width_99 + t * (q1.half_width_99 - q0.half_width_99), false)
}

fn reachable(d: f64, scheme: &SchedulerKind, config: &NetworkConfig) -> Result<bool> {
    Ok(transmission_probs(d, scheme, config)?.product() > 0.0)
}

/// Tabulates Monte Carlo outage of `scheme` on the calibration grid, stopping
/// once the interval clears `stop_above`. When the grid runs past the densities
/// the scheme can reach, the last point is placed at that edge.
///
/// Channel-aware schemes are sampled thinned so the cost follows the active
/// rather than the parent density.
pub fn calibration_curve(
    config: &NetworkConfig,
    scheme: &SchedulerKind,
    settings: &McSettings,
    calibration: &Calibration,
    stop_above: f64,
) -> Result<CalibrationCurve> {
    let settings = McSettings { sampling: Sampling::Thinned, ..*settings };
    let estimate = |d: f64| -> Result<Option<McEstimate>> {
        let cfg = config.with_lambda_t(parent_density(d, scheme, config)?);
        match estimate_outage_at(&cfg, scheme, d, &settings) {
            Ok(q) => Ok(Some(q)),
            Err(Error::Budget { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut points: Vec<(f64, McEstimate)> = Vec::new();
    for d in calibration.grid() {
        if !reachable(d, scheme, config)? {
            if let Some(&(mut lo, _)) = points.last() {
                let mut hi = d;
                while hi - lo > 1e-9 * hi {
                    let m = 0.5 * (lo + hi);
                    if reachable(m, scheme, config)? {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                if let Some(q) = estimate(lo)? {
                    points.push((lo, q));
                }
            }
            return Ok(CalibrationCurve { points, truncated: true });
        }
        let Some(q) = estimate(d)? else {
            return Ok(CalibrationCurve { points, truncated: true });
        };
        points.push((d, q));
        if q.lower > stop_above {
            break;
        }
    }
    Ok(CalibrationCurve { points, truncated: false })
}

fn row_status(e: &Error) -> String {
    format!("error: {}: {e}", e.kind())
}

fn timed<F: FnOnce(&mut ResultRow) -> Result<()>>(mut row: ResultRow, f: F) -> ResultRow {
    let start = Instant::now();
    if let Err(e) = f(&mut row) {
        row.status = row_status(&e);
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

fn operating_point_row(
    mut row: ResultRow,
    config: &NetworkConfig,
    scheme: &SchedulerKind,
    settings: &McSettings,
    inversion: Option<&Result<DensityBounds>>,
) -> ResultRow {
    let fresh;
    let inversion = match inversion {
        Some(r) => r,
        None => {
            fresh = invert_outage_for_density(scheme, config, &InversionOptions::default());
            &fresh
        }
    };
    let start = Instant::now();
    let res = (|| -> Result<()> {
        row.lambda_t = Some(config.lambda_t);
        let active = active_density_for(config, scheme)?;
        row.active_density = Some(active);
        row.set_bounds(active, scheme, config)?;
        let q = estimate_outage_at(config, scheme, active, settings)?;
        row.set_mc(q.mean, q.half_width_99, q.trials);
        row.set_inversion(inversion.as_ref().map_err(Clone::clone)?);
        Ok(())
    })();
    if let Err(e) = res {
        row.status = row_status(&e);
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

fn epsilon_row(
    row: ResultRow,
    config: &NetworkConfig,
    scheme: &SchedulerKind,
    curve: &Result<CalibrationCurve>,
    memo: &BoundMemo,
) -> ResultRow {
    timed(row, |row| {
        let eps = config.epsilon;
        let d = invert_outage_for_density_memo(scheme, config, &InversionOptions::default(), memo)?;
        row.set_inversion(&d);
        let curve = curve.as_ref().map_err(Clone::clone)?;
        let (lambda, q, hw, censored) = calibrated_density(curve, eps);
        row.density_mc = Some(lambda);
        row.tc_mc = Some(transmission_capacity(lambda, eps, config.rate_b));
        row.mc_censored = censored;
        if lambda > 0.0 {
            row.active_density = Some(lambda);
            let lt = parent_density(lambda, scheme, config)?;
            row.lambda_t = lt.is_finite().then_some(lt);
            row.set_bounds(lambda, scheme, config)?;
        }
        let trials = curve.points.first().map_or(0, |(_, e)| e.trials);
        row.set_mc(q, hw, trials);
        Ok(())
    })
}

/// Runs every (grid point, scheme) pair. Rows come back ordered by grid index,
/// then scheme order; a failing point is flagged in its row and the sweep goes on.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let schemes = spec.schedulers()?;
    let grid = &spec.sweep.grid;
    let jobs: Vec<(usize, f64, usize)> =
        grid.iter().enumerate().flat_map(|(i, &v)| (0..schemes.len()).map(move |s| (i, v, s))).collect();
    let config = spec.config;
    let settings = spec.mc;
    let rows = match spec.sweep.variable {
        SweepVariable::LambdaT => {
            let inversions: Vec<Result<DensityBounds>> = schemes
                .par_iter()
                .map(|(_, k)| invert_outage_for_density(k, &config, &InversionOptions::default()))
                .collect();
            jobs.par_iter()
                .map(|&(i, v, s)| {
                    let (label, kind) = &schemes[s];
                    operating_point_row(ResultRow::new(i, v, label), &config.with_lambda_t(v), kind, &settings, Some(&inversions[s]))
                })
                .collect()
        }
        SweepVariable::Exponent => jobs
            .par_iter()
            .map(|&(i, v, s)| {
                let (label, kind) = &schemes[s];
                operating_point_row(ResultRow::new(i, v, label), &config, &kind.with_exponent(v), &settings, None)
            })
            .collect(),
        SweepVariable::Epsilon => {
            let top = grid.iter().cloned().fold(0.0, f64::max);
            let curves: Vec<Result<CalibrationCurve>> = schemes
                .iter()
                .map(|(_, k)| calibration_curve(&config, k, &settings, &spec.calibration, top))
                .collect();
            let memos: Vec<BoundMemo> = schemes.iter().map(|_| BoundMemo::default()).collect();
            jobs.par_iter()
                .map(|&(i, v, s)| {
                    let (label, kind) = &schemes[s];
                    epsilon_row(ResultRow::new(i, v, label), &NetworkConfig { epsilon: v, ..config }, kind, &curves[s], &memos[s])
                })
                .collect()
        }
    };
    Ok(rows)
}

/// Files written by [`write_artifacts`].
pub fn write_artifacts(spec: &ExperimentSpec, rows: &[ResultRow], dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for a in &spec.outputs {
        let path = match a {
            Artifact::Csv => dir.join(format!("{}.csv", spec.name)),
            Artifact::Json => dir.join(format!("{}.json", spec.name)),
            Artifact::Plot => dir.join(format!("{}.gp", spec.name)),
        };
        match a {
            Artifact::Csv => emit_results(rows, Format::Csv, spec, &path)?,
            Artifact::Json => emit_results(rows, Format::Json, spec, &path)?,
            Artifact::Plot => emit_plot_script(rows, spec, &path)?,
        }
        written.push(path);
    }
    Ok(written)
}
