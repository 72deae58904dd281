//! Acceptance criteria 1-9, one result line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to print FAIL; the
//! target itself fails on any other FAIL and on a known failure that passes.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use sirsched::analysis::{
    coverage_area_unscheduled, dominant_coverage_measure, ic_outage_bounds, invert_outage_for_density_memo, outage_bounds_at,
    shot_noise_ccdf_bounds, BoundMemo, Intensity, InversionOptions,
};
use sirsched::cli::{asymptotic_cases, preset_families, run_suite, shot_noise_grid, Check, Suite, PINNED_SEED};
use sirsched::experiments::{preset, results_csv, run_experiment, ResultRow};
use sirsched::montecarlo::{
    active_density_for, estimate_coverage_area, estimate_outage, estimate_outage_with_ic_at, estimate_shot_noise_ccdf, McSettings,
    PairedOutage,
};
use sirsched::{DiasLaw, NetworkConfig, SchedulerKind, ThresholdPolicy};

const KNOWN_FAILURES: &[u8] = &[3, 7, 8];

const WINDOW: f64 = 480.0;

type Outcome = Result<(bool, Vec<String>), String>;

struct Criterion {
    id: u8,
    title: &'static str,
    budget_s: f64,
    run: fn() -> Outcome,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn checks_outcome(checks: &[Check]) -> (bool, Vec<String>) {
    let pass = checks.iter().all(|c| c.pass);
    let lines = checks.iter().map(|c| format!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.property, c.detail)).collect();
    (pass, lines)
}

fn closed_form_baseline() -> Outcome {
    let c = NetworkConfig::baseline(0.0);
    let mu = coverage_area_unscheduled(&c);
    let mut pass = true;
    let mut lines = vec![format!("d^2 beta^(1/2) psi = {mu:.5} m^2")];
    for (k, &l) in [1e-5, 1e-4, 5e-4].iter().enumerate() {
        let q = -(-l * mu).exp_m1();
        let s = McSettings::new(100_000, WINDOW, 1000 + k as u64);
        let est = estimate_outage(&c.with_lambda_t(l), &SchedulerKind::None, &s).map_err(e)?;
        let ok = est.overlaps(q, q);
        pass &= ok;
        lines.push(format!(
            "{} lambda={l:e} closed form {q:.6e}, mc {:.6e} 99% CI [{:.6e}, {:.6e}] (seed {}, 1e5 trials, R={WINDOW})",
            if ok { "pass" } else { "FAIL" },
            est.mean,
            est.lower,
            est.upper,
            s.master_seed
        ));
    }
    Ok((pass, lines))
}

fn shot_noise_sandwich() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, &(lambda, alpha)) in [(1e-5, 3.0), (1e-5, 4.0), (1e-4, 3.0), (1e-4, 4.0)].iter().enumerate() {
        let xs = shot_noise_grid(lambda, alpha, 8).map_err(e)?;
        let s = McSettings::new(100_000, 2000.0, 2000 + k as u64);
        let est = estimate_shot_noise_ccdf(lambda, alpha, &xs, &s).map_err(e)?;
        let mut bad = Vec::new();
        for (x, m) in xs.iter().zip(&est) {
            let b = shot_noise_ccdf_bounds(*x, Intensity::Constant(lambda), alpha).map_err(e)?;
            if !m.overlaps(b.lower, b.upper) {
                bad.push(format!("x={x:e}: mc {:.4e}±{:.1e} outside [{:.4e}, {:.4e}]", m.mean, m.half_width_99, b.lower, b.upper));
            }
        }
        pass &= bad.is_empty();
        lines.push(format!(
            "{} lambda={lambda:e} alpha={alpha}: {}/8 grid points inside (seed {}, 1e5 draws, R=2000){}",
            if bad.is_empty() { "pass" } else { "FAIL" },
            8 - bad.len(),
            s.master_seed,
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ));
    }
    Ok((pass, lines))
}

fn scheme_sandwiches() -> Outcome {
    let grid = log_grid(1e-5, 10f64.powf(-2.5), 6);
    let mut total = 0;
    let mut inside = 0;
    let mut lines = Vec::new();
    let mut per_family = Vec::new();
    for scheme in preset_families().into_iter().filter(|s| *s != SchedulerKind::None) {
        let (mut n, mut ok) = (0, 0);
        for (k, &lt) in grid.iter().enumerate() {
            let c = NetworkConfig::baseline(lt);
            let l = active_density_for(&c, &scheme).map_err(e)?;
            if l == 0.0 {
                lines.push(format!("skip {scheme} lambda_t={lt:.4e}: no transmitter passes the channel test (active density 0)"));
                continue;
            }
            let (b, _) = outage_bounds_at(l, &scheme, &c).map_err(e)?;
            let s = McSettings::new(20_000, WINDOW, 3000 + k as u64);
            let m = sirsched::montecarlo::estimate_outage_at(&c, &scheme, l, &s).map_err(e)?;
            n += 1;
            if m.overlaps(b.lower, b.upper) {
                ok += 1;
            } else {
                let side = if m.lower > b.upper { "above upper" } else { "below lower" };
                lines.push(format!(
                    "violation {scheme} alpha=4 beta=2 d=8 lambda_t={lt:.4e} active={l:.4e} seed={} trials=20000 R={WINDOW}: \
                     mc {:.4e}±{:.1e} {side} [{:.4e}, {:.4e}]",
                    s.master_seed, m.mean, m.half_width_99, b.lower, b.upper
                ));
            }
        }
        per_family.push(format!("{scheme}: {ok}/{n}"));
        total += n;
        inside += ok;
    }
    let frac = inside as f64 / total as f64;
    lines.insert(0, format!("{inside}/{total} points inside ({:.1}%, need >= 95%); {}", 100.0 * frac, per_family.join(", ")));
    Ok((frac >= 0.95, lines))
}

fn fixed_point_identities() -> Outcome {
    let checks = run_suite(Suite::Reductions, PINNED_SEED).map_err(e)?;
    let wanted = ["p_ic-is-p_c-times-p_i", "p_i-constant-when-delta-is-two-over-alpha", "fixed-point-residual"];
    let picked: Vec<Check> = checks.into_iter().filter(|c| wanted.contains(&c.property.as_str())).collect();
    if picked.len() != wanted.len() {
        return Err("reductions suite lost a property".into());
    }
    Ok(checks_outcome(&picked))
}

fn asymptotic_tightness() -> Outcome {
    let checks = run_suite(Suite::Asymptotics, PINNED_SEED).map_err(e)?;
    let (pass, mut lines) = checks_outcome(&checks);
    let names: Vec<String> = asymptotic_cases().map_err(e)?.into_iter().map(|c| c.0).collect();
    lines.push(format!("cases: {}", names.join(", ")));
    let dias = SchedulerKind::Dias { interferer: ThresholdPolicy { rho: 0.015, exponent: 0.2 } };
    for law in [DiasLaw::NearestNeighbor, DiasLaw::Printed] {
        let c = NetworkConfig { epsilon: 1e-3, dias_law: law, ..NetworkConfig::baseline(0.0) };
        let d = sirsched::analysis::invert_outage_for_density(&dias, &c, &InversionOptions::default()).map_err(e)?;
        lines.push(format!("info {dias} law={law:?} epsilon=1e-3: ratio {:.4} (limit 2)", d.upper / d.lower));
    }
    Ok((pass, lines))
}

fn coverage_measure() -> Outcome {
    let c = NetworkConfig::baseline(0.0);
    let s = McSettings::new(200_000, 1.0, 6000);
    let exact = coverage_area_unscheduled(&c);
    let m0 = estimate_coverage_area(0.0, &c, &s).map_err(e)?;
    let rel = (m0.mean / exact - 1.0).abs();
    let mut pass = rel <= 0.02;
    let mut lines = vec![format!(
        "{} mu(C_0) mc {:.3} vs closed form {exact:.3} (rel {rel:.4}, need <= 0.02; seed {}, 2e5 strata)",
        if pass { "pass" } else { "FAIL" },
        m0.mean,
        s.master_seed
    )];
    let deltas = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
    let mut mc = Vec::new();
    let mut an = Vec::new();
    for &d in &deltas {
        mc.push(estimate_coverage_area(d, &c, &s).map_err(e)?.mean / m0.mean);
        an.push(dominant_coverage_measure(d, &c).map_err(e)? / exact);
    }
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let ok = dec(&mc) && dec(&an);
    pass &= ok;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    lines.push(format!("{} ratio over Delta {deltas:?}: mc [{}], closed form [{}]", if ok { "pass" } else { "FAIL" }, fmt(&mc), fmt(&an)));
    Ok((pass, lines))
}

fn cancellation_dominance() -> Outcome {
    let mut lines = Vec::new();
    let ic = run_suite(Suite::Ic, PINNED_SEED).map_err(e)?;
    let analytic: Vec<Check> = ic.into_iter().filter(|c| c.property == "ic-bounds-below-plain-bounds").collect();
    let (pass_a, l) = checks_outcome(&analytic);
    lines.extend(l.into_iter().map(|s| format!("(a) {s}")));

    let lts = [1e-5, 1e-4, 1e-3];
    let mut paired: Vec<(SchedulerKind, f64, PairedOutage)> = Vec::new();
    let mut reversals = 0;
    for scheme in preset_families() {
        for (k, &lt) in lts.iter().enumerate() {
            let c = NetworkConfig::baseline(lt);
            let l = active_density_for(&c, &scheme).map_err(e)?;
            let s = McSettings::new(20_000, WINDOW, 7000 + k as u64);
            let p = estimate_outage_with_ic_at(&c, &scheme, l, &s).map_err(e)?;
            if p.reversals > 0 {
                lines.push(format!("(b) FAIL {scheme} lambda_t={lt:e} seed={}: {} reversals", s.master_seed, p.reversals));
            }
            reversals += p.reversals;
            paired.push((scheme, lt, p));
        }
    }
    let pass_b = reversals == 0;
    lines.push(format!("(b) {} {} paired trials, {reversals} with IC outage above plain outage", if pass_b { "pass" } else { "FAIL" }, paired.len() * 20_000));

    let gain = |p: &PairedOutage| if p.plain.mean > 0.0 { 1.0 - p.canceled.mean / p.plain.mean } else { 0.0 };
    let find = |s: &SchedulerKind, lt: f64| paired.iter().find(|(k, l, _)| k == s && *l == lt).map(|x| x.2);
    let dcas: Vec<SchedulerKind> = preset_families()
        .into_iter()
        .filter(|s| matches!(s, SchedulerKind::Dcas { channel } if channel.exponent > 0.0))
        .collect();
    let dias: Vec<SchedulerKind> = preset_families().into_iter().filter(|s| matches!(s, SchedulerKind::Dias { .. })).collect();
    let mut pass_c = true;
    for &lt in &lts {
        for a in &dias {
            for b in &dcas {
                let (ga, gb) = (gain(&find(a, lt).unwrap()), gain(&find(b, lt).unwrap()));
                let ca = {
                    let c = NetworkConfig::baseline(lt);
                    let l = active_density_for(&c, a).map_err(e)?;
                    1.0 - ic_outage_bounds(l, a, &c).map_err(e)?.lower / outage_bounds_at(l, a, &c).map_err(e)?.0.lower
                };
                let cb = {
                    let c = NetworkConfig::baseline(lt);
                    let l = active_density_for(&c, b).map_err(e)?;
                    1.0 - ic_outage_bounds(l, b, &c).map_err(e)?.lower / outage_bounds_at(l, b, &c).map_err(e)?.0.lower
                };
                let ok = ga > gb && ca > cb;
                pass_c &= ok;
                lines.push(format!(
                    "(c) {} lambda_t={lt:e}: IC outage reduction {a} mc {ga:.3} analytic {ca:.3} vs {b} mc {gb:.3} analytic {cb:.3}",
                    if ok { "pass" } else { "FAIL" }
                ));
            }
        }
    }
    for a in &dias {
        let (s, d) = (gain(&find(a, 1e-5).unwrap()), gain(&find(a, 1e-3).unwrap()));
        let ok = s > d;
        pass_c &= ok;
        lines.push(format!("(c) {} {a}: mc IC outage reduction sparse (1e-5) {s:.3} vs dense (1e-3) {d:.3}", if ok { "pass" } else { "FAIL" }));
    }
    Ok((pass_a && pass_b && pass_c, lines))
}

static PRESET_ROWS: Mutex<Option<HashMap<(String, usize), Vec<ResultRow>>>> = Mutex::new(None);

fn preset_rows(name: &str, threads: usize) -> Result<Vec<ResultRow>, String> {
    let key = (name.to_string(), threads);
    if let Some(r) = PRESET_ROWS.lock().unwrap().get_or_insert_with(HashMap::new).get(&key) {
        return Ok(r.clone());
    }
    let spec = preset(name).map_err(e)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(e)?;
    let rows = pool.install(|| run_experiment(&spec)).map_err(e)?;
    PRESET_ROWS.lock().unwrap().get_or_insert_with(HashMap::new).insert(key, rows.clone());
    Ok(rows)
}

fn tc_ordering() -> Outcome {
    let rows = preset_rows("fig5", 3)?;
    let spec = preset("fig5").map_err(e)?;
    let mut pass = true;
    let mut lines = Vec::new();
    let pick = |label: &str, f: fn(&ResultRow) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter(|r| r.scheme == label).map(|r| f(r).unwrap_or(f64::NAN)).collect()
    };
    let measures: [(&str, fn(&ResultRow) -> Option<f64>); 3] =
        [("analytic tc_lower", |r| r.tc_lower), ("analytic tc_upper", |r| r.tc_upper), ("mc-calibrated tc", |r| r.tc_mc)];
    for (what, f) in measures {
        let (dicas, dcas, dias) = (pick("dicas", f), pick("dcas", f), pick("dias", f));
        let bad: Vec<String> = spec
            .sweep
            .grid
            .iter()
            .enumerate()
            .filter(|&(k, _)| !(dicas[k] >= dcas[k].max(dias[k])))
            .map(|(k, eps)| format!("eps={eps}: dicas {:.4e} dcas {:.4e} dias {:.4e}", dicas[k], dcas[k], dias[k]))
            .collect();
        pass &= bad.is_empty();
        lines.push(format!(
            "{} {what} ordering at {}/{} eps{}",
            if bad.is_empty() { "pass" } else { "FAIL" },
            spec.sweep.grid.len() - bad.len(),
            spec.sweep.grid.len(),
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ));
        for label in ["none", "dcas", "dias", "dicas"] {
            let v = pick(label, f);
            let drops: Vec<String> = (1..v.len())
                .filter(|&k| !(v[k] >= v[k - 1]))
                .map(|k| format!("eps {}->{}: {:.4e}->{:.4e}", spec.sweep.grid[k - 1], spec.sweep.grid[k], v[k - 1], v[k]))
                .collect();
            if !drops.is_empty() {
                pass = false;
                lines.push(format!("FAIL {what} {label} not nondecreasing in eps: {}", drops.join("; ")));
            }
        }
    }
    let censored: Vec<String> = rows.iter().filter(|r| r.scheme == "dicas" && (r.censored || r.mc_censored)).map(|r| format!("{}", r.sweep_value)).collect();
    lines.push(format!("info dicas density sits at the reachability edge (censored) at eps {}", censored.join(", ")));

    let printed = NetworkConfig { dias_law: DiasLaw::Printed, ..spec.config };
    let schemes = spec.schedulers().map_err(e)?;
    let memos: Vec<BoundMemo> = schemes.iter().map(|_| BoundMemo::default()).collect();
    let mut holds = 0;
    for &eps in &spec.sweep.grid {
        let c = NetworkConfig { epsilon: eps, ..printed };
        let mut tc = HashMap::new();
        for ((label, kind), memo) in schemes.iter().zip(&memos) {
            tc.insert(label.as_str(), invert_outage_for_density_memo(kind, &c, &InversionOptions::default(), memo).map_err(e)?.tc_lower);
        }
        if tc["dicas"] >= tc["dcas"].max(tc["dias"]) {
            holds += 1;
        }
    }
    lines.push(format!("info printed transmission law: analytic tc_lower ordering holds at {holds}/{} eps", spec.sweep.grid.len()));
    Ok((pass, lines))
}

fn determinism() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in ["fig3", "fig4", "fig5"] {
        let path = format!("{}/presets/golden/{name}.csv", env!("CARGO_MANIFEST_DIR"));
        let golden = std::fs::read_to_string(&path).map_err(|x| format!("{path}: {x}"))?;
        for threads in [1, 3] {
            let csv = results_csv(&preset_rows(name, threads)?).map_err(e)?;
            let ok = csv == golden;
            pass &= ok;
            let note = if ok {
                String::new()
            } else {
                let line = csv.lines().zip(golden.lines()).position(|(a, b)| a != b).map_or("length".into(), |k| format!("line {}", k + 1));
                format!(" (first difference at {line})")
            };
            lines.push(format!("{} {name} with {threads} thread(s): {} bytes{note}", if ok { "pass" } else { "FAIL" }, csv.len()));
        }
    }
    Ok((pass, lines))
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "closed-form baseline", budget_s: 60.0, run: closed_form_baseline },
        Criterion { id: 2, title: "shot-noise CCDF sandwich", budget_s: 120.0, run: shot_noise_sandwich },
        Criterion { id: 3, title: "scheme bound sandwiches", budget_s: 600.0, run: scheme_sandwiches },
        Criterion { id: 4, title: "fixed-point identities", budget_s: 10.0, run: fixed_point_identities },
        Criterion { id: 5, title: "asymptotic tightness", budget_s: 60.0, run: asymptotic_tightness },
        Criterion { id: 6, title: "coverage measure", budget_s: 60.0, run: coverage_measure },
        Criterion { id: 7, title: "interference cancellation dominance", budget_s: 300.0, run: cancellation_dominance },
        Criterion { id: 8, title: "transmission capacity ordering", budget_s: 300.0, run: tc_ordering },
        Criterion { id: 9, title: "determinism against golden CSVs", budget_s: f64::INFINITY, run: determinism },
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut passed = Vec::new();
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let t = Instant::now();
        let out = (c.run)();
        let secs = t.elapsed().as_secs_f64();
        let (ok, lines) = match out {
            Ok((ok, lines)) => (ok, lines),
            Err(msg) => (false, vec![format!("error: {msg}")]),
        };
        let in_time = secs <= c.budget_s;
        let ok = ok && in_time;
        let budget = if c.budget_s.is_finite() { format!(" / {:.0} s", c.budget_s) } else { String::new() };
        let known = if !ok && KNOWN_FAILURES.contains(&c.id) { " (known failure)" } else { "" };
        println!("criterion {} {} {} ({secs:.1} s{budget}){known}", c.id, if ok { "PASS" } else { "FAIL" }, c.title);
        if !in_time {
            println!("    FAIL runtime {secs:.1} s exceeds {:.0} s", c.budget_s);
        }
        for l in lines {
            println!("    {l}");
        }
        if ok {
            passed.push(c.id);
        } else {
            failed.push(c.id);
        }
    }
    let unexpected: Vec<u8> = failed.iter().copied().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    let stale: Vec<u8> = passed.iter().copied().filter(|id| KNOWN_FAILURES.contains(id)).collect();
    println!("acceptance: passed {passed:?}, failed {failed:?}, known failures {KNOWN_FAILURES:?}");
    if !unexpected.is_empty() || !stale.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}, known failures now passing {stale:?}");
        std::process::exit(1);
    }
}
