//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a validation property failed, 2 bad input
//! (usage, schema, domain or i/o), 3 numerical failure.

mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{ic_outage_bounds, invert_outage_for_density, outage_bounds_at, DensityBounds, InversionOptions, OutageBounds};
use crate::config::{DiasLaw, DistanceLaw, NetworkConfig};
use crate::error::{Error, Result};
use crate::experiments::{preset, preset_names, run_experiment, write_artifacts, ExperimentSpec, ResultRow, SchemeSpec, SchemeTag};
use crate::schedulers::{SchedulerKind, ThresholdPolicy};
use crate::solvers::solve_active_density;

pub use suites::{asymptotic_cases, preset_families, run_suite, shot_noise_grid, Check, Suite, PINNED_SEED};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SIRSCHED_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sirsched", version, about = "Threshold scheduling bounds and Monte Carlo checks for Poisson ad hoc networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment spec (a TOML file or a preset name) and write its artifacts.
    Run(RunArgs),
    /// Outage bounds at one parent density.
    Bounds(BoundsArgs),
    /// Density and transmission-capacity bounds at one outage target.
    Tc(TcArgs),
    /// Run a property suite: bounds-sandwich, reductions, asymptotics or ic.
    Validate(ValidateArgs),
    /// List the embedded presets or print one.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Spec file; `presets/<name>` falls back to the embedded preset.
    pub spec: PathBuf,
    /// Directory for the artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override the Monte Carlo trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    None,
    Dcas,
    Dias,
    Dicas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    NearestNeighbor,
    Printed,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Constant link distance in metres.
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub distance: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::None)]
    pub scheme: SchemeArg,
    /// Channel threshold scale.
    #[arg(long, allow_negative_numbers = true)]
    pub rho_c: Option<f64>,
    /// Channel threshold exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Interferer threshold scale.
    #[arg(long, allow_negative_numbers = true)]
    pub rho_i: Option<f64>,
    /// Interferer threshold exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = LawArg::NearestNeighbor)]
    pub dias_law: LawArg,
    /// Use the interference-cancellation bounds.
    #[arg(long)]
    pub ic: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Parent density per square metre.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_t: f64,
}

#[derive(Debug, Args)]
pub struct TcArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Outage target.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Rate per transmission.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rate: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub suite: String,
    /// Master seed for the randomized properties.
    #[arg(long, default_value_t = PINNED_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    /// Print this preset's TOML.
    pub name: Option<String>,
}

impl NetworkArgs {
    fn config(&self, lambda_t: f64, epsilon: f64, rate_b: f64) -> Result<NetworkConfig> {
        let c = NetworkConfig {
            alpha: self.alpha,
            beta: self.beta,
            lambda_t,
            distance: DistanceLaw::Constant { d: self.distance },
            epsilon,
            rate_b,
            dias_law: match self.dias_law {
                LawArg::NearestNeighbor => DiasLaw::NearestNeighbor,
                LawArg::Printed => DiasLaw::Printed,
            },
            ..NetworkConfig::baseline(lambda_t)
        };
        c.validate()?;
        Ok(c)
    }

    fn scheme(&self) -> Result<SchedulerKind> {
        let policy = |rho: Option<f64>, exp: Option<f64>| {
            (rho.is_some() || exp.is_some()).then(|| ThresholdPolicy { rho: rho.unwrap_or(1.0), exponent: exp.unwrap_or(0.0) })
        };
        let spec = SchemeSpec {
            label: None,
            kind: match self.scheme {
                SchemeArg::None => SchemeTag::None,
                SchemeArg::Dcas => SchemeTag::Dcas,
                SchemeArg::Dias => SchemeTag::Dias,
                SchemeArg::Dicas => SchemeTag::Dicas,
            },
            channel: policy(self.rho_c, self.gamma),
            interferer: policy(self.rho_i, self.delta),
        };
        let kind = spec.scheduler().map_err(|m| Error::param(format!("{m} (use --rho-c/--gamma and --rho-i/--delta)")))?;
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Serialize)]
pub struct BoundsReport {
    pub scheme: String,
    pub lambda_t: f64,
    pub active_density: f64,
    pub p_c: f64,
    pub p_i: f64,
    pub cancellation: bool,
    pub bounds: OutageBounds,
}

/// Library path behind `sirsched bounds`.
pub fn bounds_report(scheme: &SchedulerKind, config: &NetworkConfig, cancellation: bool) -> Result<BoundsReport> {
    let fp = solve_active_density(scheme, config)?;
    let (plain, probs) = outage_bounds_at(fp.lambda, scheme, config)?;
    let bounds = if cancellation { ic_outage_bounds(fp.lambda, scheme, config)? } else { plain };
    Ok(BoundsReport {
        scheme: scheme.to_string(),
        lambda_t: config.lambda_t,
        active_density: fp.lambda,
        p_c: probs.p_c,
        p_i: probs.p_i,
        cancellation,
        bounds,
    })
}

#[derive(Debug, Serialize)]
pub struct TcReport {
    pub scheme: String,
    pub epsilon: f64,
    pub cancellation: bool,
    pub density: DensityBounds,
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn report_error(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "{}", error_json(e.kind(), &e.to_string()));
    e.exit_code()
}

/// Applies the thread count from the environment to the global pool.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::param(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(Error::param(format!("{THREADS_ENV} must be a positive integer, got {v:?}")));
    }
    // a second call finds the pool already built, which is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let _ = writeln!(err, "{}", error_json("usage", msg.trim_end()));
            return EXIT_INPUT;
        }
    };
    if let Err(e) = init_threads() {
        return report_error(err, &e);
    }
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => report_error(err, &e),
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Tc(a) => cmd_tc(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Presets(a) => cmd_presets(a, out),
    }
}

/// Reads a spec file, falling back to an embedded preset when the path does not exist.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    if path.exists() {
        return ExperimentSpec::from_path(path);
    }
    preset(&path.to_string_lossy()).map_err(|_| Error::Io(format!("{}: no such file or preset", path.display())))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = load_spec(&a.spec)?;
    if let Some(t) = a.trials {
        spec.mc.trials = t;
    }
    if let Some(s) = a.seed {
        spec.mc.master_seed = s;
    }
    spec.validate()?;
    let rows = run_experiment(&spec)?;
    let files = write_artifacts(&spec, &rows, &a.out)?;
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    if a.json {
        let v = json!({
            "name": spec.name,
            "trials": spec.mc.trials,
            "seed": spec.mc.master_seed,
            "rows": rows.len(),
            "violations": rows.iter().filter(|r| r.violation).count(),
            "failed_rows": failed.len(),
            "files": files,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "{}: {} rows, trials {}, seed {}", spec.name, rows.len(), spec.mc.trials, spec.mc.master_seed)?;
        for r in rows.iter().filter(|r| r.violation) {
            writeln!(
                out,
                "violation: {} {}={} lambda_t={:e} mc={:e}±{:e} bounds=[{:e}, {:e}]",
                r.scheme,
                spec.sweep.variable.name(),
                r.sweep_value,
                r.lambda_t.unwrap_or(f64::NAN),
                r.mc_outage.unwrap_or(f64::NAN),
                r.mc_ci99.unwrap_or(f64::NAN),
                r.outage_lower.unwrap_or(f64::NAN),
                r.outage_upper.unwrap_or(f64::NAN),
            )?;
        }
        for f in &files {
            writeln!(out, "wrote {f}")?;
        }
    }
    if let Some(r) = failed.first() {
        let numeric = failed.iter().any(|r| r.status.contains("numeric"));
        let msg = format!("{} of {} rows failed; first: {} {} {}", failed.len(), rows.len(), r.scheme, r.sweep_value, r.status);
        return Err(if numeric { Error::numeric(msg, f64::NAN) } else { Error::Degenerate(msg) });
    }
    Ok(EXIT_OK)
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.net.config(a.lambda_t, 0.1, 1.0)?;
    let scheme = a.net.scheme()?;
    let r = bounds_report(&scheme, &config, a.net.ic)?;
    if a.net.json {
        writeln!(out, "{}", serde_json::to_string(&r).map_err(|e| Error::Io(e.to_string()))?)?;
    } else {
        writeln!(out, "scheme          {}", r.scheme)?;
        writeln!(out, "lambda_t        {:.11e}", r.lambda_t)?;
        writeln!(out, "active density  {:.11e}", r.active_density)?;
        writeln!(out, "p_c             {:.11e}", r.p_c)?;
        writeln!(out, "p_i             {:.11e}", r.p_i)?;
        writeln!(out, "outage lower    {:.11e}", r.bounds.lower)?;
        writeln!(out, "outage upper    {:.11e}", r.bounds.upper)?;
        writeln!(out, "clamped         {}", r.bounds.clamped)?;
    }
    Ok(EXIT_OK)
}

fn cmd_tc(a: &TcArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.net.config(0.0, a.epsilon, a.rate)?;
    let scheme = a.net.scheme()?;
    let opts = InversionOptions { cancellation: a.net.ic, ..InversionOptions::default() };
    let d = invert_outage_for_density(&scheme, &config, &opts)?;
    let r = TcReport { scheme: scheme.to_string(), epsilon: a.epsilon, cancellation: a.net.ic, density: d };
    if a.net.json {
        writeln!(out, "{}", serde_json::to_string(&r).map_err(|e| Error::Io(e.to_string()))?)?;
    } else {
        writeln!(out, "scheme          {}", r.scheme)?;
        writeln!(out, "epsilon         {:.11e}", r.epsilon)?;
        writeln!(out, "density lower   {:.11e}{}", d.lower, if d.censored_lower { " (censored)" } else { "" })?;
        writeln!(out, "density upper   {:.11e}{}", d.upper, if d.censored_upper { " (censored)" } else { "" })?;
        writeln!(out, "tc lower        {:.11e}", d.tc_lower)?;
        writeln!(out, "tc upper        {:.11e}", d.tc_upper)?;
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let suite: Suite = a.suite.parse()?;
    let checks = run_suite(suite, a.seed)?;
    if a.json {
        let v = json!({ "suite": suite.name(), "seed": a.seed, "checks": checks });
        writeln!(out, "{v}")?;
    } else {
        for c in &checks {
            writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.property, c.detail)?;
        }
    }
    Ok(if checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_presets(a: &PresetsArgs, out: &mut dyn Write) -> Result<i32> {
    match &a.name {
        None => {
            for n in preset_names() {
                let p = preset(n)?;
                writeln!(out, "{n}\t{}", p.description)?;
            }
        }
        Some(n) => {
            let p = preset(n)?;
            write!(out, "{}", p.to_toml_string()?)?;
        }
    }
    Ok(EXIT_OK)
}
