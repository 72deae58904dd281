use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentSpec, ResultRow, SweepVariable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// CSV header. Densities are per m^2, capacities bits/s/Hz per m^2,
/// outages and intervals are probabilities.
pub const CSV_COLUMNS: [&str; 21] = [
    "index",
    "sweep_value",
    "scheme",
    "lambda_t_per_m2",
    "active_density_per_m2",
    "outage_lower",
    "outage_upper",
    "clamped",
    "mc_outage",
    "mc_ci99",
    "mc_trials",
    "violation",
    "density_lower_per_m2",
    "density_upper_per_m2",
    "tc_lower_per_m2",
    "tc_upper_per_m2",
    "censored",
    "density_mc_per_m2",
    "tc_mc_per_m2",
    "mc_censored",
    "status",
];

/// Rows with the spec that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsDocument {
    pub name: String,
    pub sweep_variable: SweepVariable,
    pub trials: u64,
    pub seed: u64,
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
}

impl ResultsDocument {
    pub fn new(spec: &ExperimentSpec, rows: &[ResultRow]) -> Self {
        ResultsDocument {
            name: spec.name.clone(),
            sweep_variable: spec.sweep.variable,
            trials: spec.mc.trials,
            seed: spec.mc.master_seed,
            spec: spec.clone(),
            rows: rows.to_vec(),
        }
    }
}

/// Twelve significant digits, or `inf`/`nan`.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            num(r.sweep_value),
            r.scheme.clone(),
            opt(r.lambda_t),
            opt(r.active_density),
            opt(r.outage_lower),
            opt(r.outage_upper),
            r.clamped.to_string(),
            opt(r.mc_outage),
            opt(r.mc_ci99),
            r.mc_trials.to_string(),
            r.violation.to_string(),
            opt(r.density_lower),
            opt(r.density_upper),
            opt(r.tc_lower),
            opt(r.tc_upper),
            r.censored.to_string(),
            opt(r.density_mc),
            opt(r.tc_mc),
            r.mc_censored.to_string(),
            r.status.clone(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn results_json(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ResultsDocument::new(spec, rows)).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn emit_results(rows: &[ResultRow], format: Format, spec: &ExperimentSpec, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("no rows to write"));
    }
    let text = match format {
        Format::Csv => results_csv(rows)?,
        Format::Json => results_json(spec, rows)?,
    };
    write_file(path, &text)
}

pub fn read_results_json(text: &str) -> Result<ResultsDocument> {
    serde_json::from_str(text).map_err(|e| Error::Spec(format!("results json: {e}")))
}

/// Parses a results CSV; wall times are not stored there and come back as zero.
pub fn read_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let bad = |line: usize, msg: String| Error::Spec(format!("results csv row {line}: {msg}"));
    let header = r.headers().map_err(|e| Error::Spec(format!("results csv header: {e}")))?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Spec("results csv header does not match the column contract".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(line + 1, e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let f = |k: usize| -> Result<f64> { field(k).parse().map_err(|_| bad(line + 1, format!("{}: not a number", CSV_COLUMNS[k]))) };
        let o = |k: usize| -> Result<Option<f64>> { if field(k).is_empty() { Ok(None) } else { f(k).map(Some) } };
        let b = |k: usize| -> Result<bool> { field(k).parse().map_err(|_| bad(line + 1, format!("{}: not a boolean", CSV_COLUMNS[k]))) };
        let u = |k: usize| -> Result<u64> { field(k).parse().map_err(|_| bad(line + 1, format!("{}: not a count", CSV_COLUMNS[k]))) };
        rows.push(ResultRow {
            index: u(0)? as usize,
            sweep_value: f(1)?,
            scheme: field(2).to_string(),
            lambda_t: o(3)?,
            active_density: o(4)?,
            outage_lower: o(5)?,
            outage_upper: o(6)?,
            clamped: b(7)?,
            mc_outage: o(8)?,
            mc_ci99: o(9)?,
            mc_trials: u(10)?,
            violation: b(11)?,
            density_lower: o(12)?,
            density_upper: o(13)?,
            tc_lower: o(14)?,
            tc_upper: o(15)?,
            censored: b(16)?,
            density_mc: o(17)?,
            tc_mc: o(18)?,
            mc_censored: b(19)?,
            status: field(20).to_string(),
            runtime_s: 0.0,
        });
    }
    Ok(rows)
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Gnuplot script with inline data: one curve per scheme, bound bands and
/// Monte Carlo points with 99% error bars. Outage target sweeps plot capacity,
/// whose simulated points carry no bar; the others plot outage.
pub fn plot_script(rows: &[ResultRow], spec: &ExperimentSpec) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.scheme.as_str()) {
            labels.push(&r.scheme);
        }
    }
    let by_capacity = spec.sweep.variable == SweepVariable::Epsilon;
    let (xlabel, log_x) = match spec.sweep.variable {
        SweepVariable::LambdaT => ("parent density lambda_t (1/m^2)", true),
        SweepVariable::Epsilon => ("outage target epsilon", false),
        SweepVariable::Exponent => ("threshold exponent", false),
    };
    let ylabel = if by_capacity { "transmission capacity (bits/s/Hz/m^2)" } else { "outage probability" };
    let mut s = String::new();
    let _ = writeln!(s, "# {}: {} sweep, {} trials, seed {}", spec.name, spec.sweep.variable.name(), spec.mc.trials, spec.mc.master_seed);
    let _ = writeln!(s, "# columns: x band_lower band_upper mc mc_lower mc_upper");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output {}", quoted(&format!("{}.png", spec.name)));
    let _ = writeln!(s, "set xlabel {}", quoted(xlabel));
    let _ = writeln!(s, "set ylabel {}", quoted(ylabel));
    let _ = writeln!(s, "set key left top");
    let _ = writeln!(s, "set style fill transparent solid 0.25 noborder");
    if log_x {
        let _ = writeln!(s, "set logscale x");
    }
    for (k, label) in labels.iter().enumerate() {
        let _ = writeln!(s, "$s{k} << EOD");
        for r in rows.iter().filter(|r| r.scheme == *label) {
            let (lo, hi, mid, hw) = if by_capacity {
                (r.tc_lower, r.tc_upper, r.tc_mc, r.tc_mc.map(|_| 0.0))
            } else {
                (r.outage_lower, r.outage_upper, r.mc_outage, r.mc_ci99)
            };
            let field = |x: Option<f64>| x.filter(|v| v.is_finite()).map_or("NaN".to_string(), num);
            let (ml, mh) = match (mid, hw) {
                (Some(m), Some(h)) => (Some(m - h), Some(m + h)),
                _ => (None, None),
            };
            let _ = writeln!(s, "{} {} {} {} {} {}", num(r.sweep_value), field(lo), field(hi), field(mid), field(ml), field(mh));
        }
        let _ = writeln!(s, "EOD");
    }
    let mut parts = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let c = k + 1;
        parts.push(format!("$s{k} using 1:2:3 with filledcurves lc {c} title {}", quoted(&format!("{label} bounds"))));
        parts.push(format!("$s{k} using 1:4:5:6 with yerrorbars lc {c} pt 7 title {}", quoted(&format!("{label} simulation"))));
    }
    let _ = writeln!(s, "plot \\\n    {}", parts.join(", \\\n    "));
    s
}

pub fn emit_plot_script(rows: &[ResultRow], spec: &ExperimentSpec, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("no rows to plot"));
    }
    write_file(path, &plot_script(rows, spec))
}
