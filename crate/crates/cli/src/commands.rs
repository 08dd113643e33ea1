use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use emfactor::bloch::{compare_band_tables, compute_bands, default_window, free_grid_bands, nonconstancy_report, BandTable};
use emfactor::field::Spectral;
use emfactor::identities::run_suite;
use emfactor::resolvent::run_resolvent_lab;
use serde::Serialize;
use serde_json::json;

use crate::cache::{load_record, run_cached, Produced, RunSummary, RECORD_FILE};
use crate::config::{MediumSpec, RunConfig};
use crate::{json, CliError};

/// Extra window for the finer grid of a convergence comparison.
pub const FINE_WINDOW_PAD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub force: bool,
    /// Worker count for sweeps.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out: PathBuf::from("out"), force: false, jobs: 1 }
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> {
    json::to_bytes(v).map_err(|e| CliError::Io(e.to_string()))
}

fn exit_code(pass: bool) -> i32 {
    if pass {
        0
    } else {
        1
    }
}

pub fn cmd_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let medium = cfg.medium()?;
    let key = cfg.cache_key("verify")?;
    run_cached(&opts.out, "verify", &key, opts.force, || {
        let report = run_suite(&medium, &cfg.suite())?;
        let failed: Vec<String> = report
            .reports
            .iter()
            .filter(|r| !r.pass && !r.skipped)
            .map(|r| format!("{} k={:?} λ={:?}", r.identity, r.k, r.lambda))
            .collect();
        let mut worst: BTreeMap<String, f64> = BTreeMap::new();
        for r in &report.reports {
            let e = worst.entry(r.identity.to_string()).or_insert(0.0);
            *e = e.max(r.max_residual);
        }
        let payload = json!({ "medium_fingerprint": medium.fingerprint(), "suite": report });
        Ok(Produced {
            files: vec![("verify.json".into(), to_json(&payload)?)],
            exit_code: exit_code(report.all_pass),
            summary: json!({ "all_pass": report.all_pass, "checks": report.reports.len(), "failed": failed, "max_residual": worst }),
        })
    })
}

/// Largest deviation from the free bands, aligned by position in the full
/// spectrum.
fn free_oracle_deviation(table: &BandTable, grid: &emfactor::field::Grid, eps: f64, mu: f64) -> f64 {
    table
        .samples
        .iter()
        .map(|s| {
            let free = free_grid_bands(grid, eps, mu, s.k);
            s.values.iter().enumerate().map(|(j, v)| (v - free[s.first_index + j]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn cmd_bands(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let medium = cfg.medium()?;
    let spec = &cfg.bands;
    cfg.check_dense(spec.n)?;
    if let Some(n) = spec.compare_n {
        cfg.check_dense(n)?;
    }
    let path = spec.path.build()?;
    let key = cfg.cache_key("bands")?;
    run_cached(&opts.out, "bands", &key, opts.force, || {
        let cap = cfg.memory_cap();
        let grid = medium.grid(spec.n)?;
        let c = medium.coefficients(&Spectral, &grid)?;
        let window = spec.window.unwrap_or_else(|| default_window(&c));
        let table = compute_bands(&c, &path, window, cap)?;
        let defect = table.max_hermitian_defect();
        let oracle = medium.is_constant().then(|| free_oracle_deviation(&table, &grid, c.eps.mean().re, c.mu.mean().re));
        let nonconstancy = if path.len() >= 2 {
            json!({ "report": nonconstancy_report(&table, spec.delta)? })
        } else {
            json!({ "report": null, "note": "a single k-point carries no variation" })
        };
        let mut pass = defect <= spec.hermitian_tolerance && oracle.is_none_or(|d| d <= spec.oracle_tolerance);
        let mut files = vec![
            ("bands.csv".to_string(), table.to_csv().into_bytes()),
            (
                "bands.json".to_string(),
                to_json(&json!({
                    "medium_fingerprint": medium.fingerprint(),
                    "max_hermitian_defect": defect,
                    "free_oracle_deviation": oracle,
                    "table": table,
                }))?,
            ),
            ("nonconstancy.json".to_string(), to_json(&nonconstancy)?),
        ];
        let mut summary = json!({
            "n": spec.n,
            "samples": table.samples.len(),
            "max_hermitian_defect": defect,
            "free_oracle_deviation": oracle,
            "flagged": nonconstancy["report"]["flagged"].as_array().map(|a| a.len()),
        });
        if let Some(n) = spec.compare_n {
            let fine_c = medium.coefficients(&Spectral, &medium.grid(n)?)?;
            // The fine table gets a wider window so every coarse value near the
            // edge has a partner to align with.
            let fine = compute_bands(&fine_c, &path, window + FINE_WINDOW_PAD, cap)?;
            let conv = compare_band_tables(&table, &fine, spec.compare_margin)?;
            let ok = conv.max_deviation <= spec.compare_tolerance;
            pass &= ok;
            summary["convergence_max_deviation"] = json!(conv.max_deviation);
            files.push((
                "convergence.json".into(),
                to_json(&json!({
                    "coarse_n": spec.n,
                    "fine_n": n,
                    "margin": spec.compare_margin,
                    "tolerance": spec.compare_tolerance,
                    "pass": ok,
                    "comparison": conv,
                }))?,
            ));
        }
        Ok(Produced { files, exit_code: exit_code(pass), summary })
    })
}

pub fn cmd_resolvent(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let medium = cfg.medium()?;
    cfg.check_dense(cfg.resolvent.n)?;
    cfg.resolvent.ray.validate()?;
    let key = cfg.cache_key("resolvent")?;
    run_cached(&opts.out, "resolvent", &key, opts.force, || {
        let c = medium.coefficients(&Spectral, &medium.grid(cfg.resolvent.n)?)?;
        let report = run_resolvent_lab(&c, &cfg.resolvent_lab())?;
        let errors = report.points.iter().filter(|p| p.error.is_some()).count();
        let max = |f: fn(&emfactor::resolvent::ResolventPoint) -> f64| {
            report.points.iter().filter(|p| p.error.is_none()).map(f).fold(0.0, f64::max)
        };
        let summary = json!({
            "all_pass": report.all_pass,
            "points": report.points.len(),
            "failed_points": errors,
            "max_vs_dense": max(|p| p.max_vs_dense.unwrap_or(0.0)),
            "max_residual": max(|p| p.max_residual),
            "max_fzf": max(|p| p.max_fzf),
            "decay_spread": report.decay.spread,
        });
        Ok(Produced { files: vec![("resolvent.json".into(), to_json(&report)?)], exit_code: exit_code(report.all_pass), summary })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub preset: String,
    pub amplitude: Option<f64>,
    pub command: String,
    pub exit_code: i32,
    pub cache_hit: bool,
    pub config_hash: Option<String>,
    pub dir: Option<String>,
    pub error: Option<String>,
    pub summary: serde_json::Value,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("preset,amplitude,command,exit_code,cache_hit,config_hash,metric,value,error\n");
    for r in rows {
        let (metric, value) = match r.command.as_str() {
            "verify" => ("max_residual", r.summary["max_residual"].as_object().map(|m| m.values().filter_map(|v| v.as_f64()).fold(0.0, f64::max))),
            "bands" => match r.summary["free_oracle_deviation"].as_f64() {
                Some(d) => ("free_oracle_deviation", Some(d)),
                None => ("max_hermitian_defect", r.summary["max_hermitian_defect"].as_f64()),
            },
            _ => ("max_residual", r.summary["max_residual"].as_f64()),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.preset),
            r.amplitude.map(|a| format!("{a:.16e}")).unwrap_or_default(),
            r.command,
            r.exit_code,
            r.cache_hit,
            r.config_hash.as_deref().unwrap_or(""),
            metric,
            value.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            csv_field(r.error.as_deref().unwrap_or("")),
        ));
    }
    s
}

/// Runs every configured command for every sweep entry on a pool of
/// `opts.jobs` workers. Each run is cached on its own, so an interrupted
/// sweep resumes where it stopped.
pub fn cmd_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    for c in &cfg.sweep.commands {
        if !matches!(c.as_str(), "verify" | "bands" | "resolvent") {
            return Err(CliError::Config(format!("sweep cannot run `{c}`")));
        }
    }
    let jobs: Vec<(usize, &crate::config::SweepEntry, &str)> = cfg
        .sweep
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, e)| cfg.sweep.commands.iter().map(move |c| (i, e, c.as_str())))
        .collect();
    let sub_opts = RunOptions { force: opts.force, ..opts.clone() };
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|s| {
        for _ in 0..opts.jobs.max(1).min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(_, entry, command)) = jobs.get(i) else { break };
                let mut derived = cfg.clone();
                derived.medium = MediumSpec { preset: Some(entry.preset.clone()), amplitude: entry.amplitude, ..cfg.medium.clone() };
                derived.medium.eps = None;
                derived.medium.mu = None;
                let res = match command {
                    "verify" => cmd_verify(&derived, &sub_opts),
                    "bands" => cmd_bands(&derived, &sub_opts),
                    _ => cmd_resolvent(&derived, &sub_opts),
                };
                let row = match res {
                    Ok(r) => SweepRow {
                        preset: entry.preset.clone(),
                        amplitude: entry.amplitude,
                        command: command.into(),
                        exit_code: r.exit_code(),
                        cache_hit: r.cache_hit,
                        config_hash: Some(r.record.config_hash.clone()),
                        dir: r.dir.file_name().map(|d| d.to_string_lossy().into_owned()),
                        error: None,
                        summary: r.record.summary.clone(),
                    },
                    Err(e) => SweepRow {
                        preset: entry.preset.clone(),
                        amplitude: entry.amplitude,
                        command: command.into(),
                        exit_code: e.exit_code(),
                        cache_hit: false,
                        config_hash: None,
                        dir: None,
                        error: Some(e.to_string()),
                        summary: serde_json::Value::Null,
                    },
                };
                slots.lock().expect("no worker panicked")[i] = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = slots.into_inner().expect("no worker panicked").into_iter().flatten().collect();
    let failed = rows.iter().filter(|r| r.exit_code != 0).count();
    let hits = rows.iter().filter(|r| r.cache_hit).count();
    let key = cfg.cache_key("sweep")?;
    // The summary reflects cache state, so it is always rewritten.
    run_cached(&opts.out, "sweep", &key, true, || {
        Ok(Produced {
            files: vec![("summary.csv".into(), sweep_csv(&rows).into_bytes()), ("summary.json".into(), to_json(&rows)?)],
            exit_code: exit_code(failed == 0),
            summary: json!({ "runs": rows.len(), "failed": failed, "cache_hits": hits }),
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub dir: String,
    pub command: String,
    pub exit_code: i32,
    pub config_hash: String,
    pub payload_hash: String,
    pub finished_unix: f64,
    pub summary: serde_json::Value,
}

/// Collects every run record below `out` into `out/report.json`.
pub fn cmd_report(out: &Path) -> Result<Vec<ReportRow>, CliError> {
    let entries = fs::read_dir(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut rows = Vec::new();
    for entry in entries.flatten() {
        let dir = entry.path();
        if !dir.join(RECORD_FILE).is_file() {
            continue;
        }
        if let Some(r) = load_record(&dir) {
            rows.push(ReportRow {
                dir: entry.file_name().to_string_lossy().into_owned(),
                command: r.command,
                exit_code: r.exit_code,
                config_hash: r.config_hash,
                payload_hash: r.payload_hash,
                finished_unix: r.finished_unix,
                summary: r.summary,
            });
        }
    }
    rows.sort_by(|a, b| a.dir.cmp(&b.dir));
    let p = out.join("report.json");
    fs::write(&p, to_json(&rows)?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    Ok(rows)
}
