//! Command-line front end: audits, simulations, comparisons and sweeps
//! driven by one JSON config.
//!
//! Exit codes: 0 success, 1 config error, 2 failed audit, 3 simulator error.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cattaneo_core::audit::{coleman_noll_audit, AuditReport};
use cattaneo_core::fourier::{fourier_audit, fourier_from_cattaneo};
use cattaneo_core::material::MaterialModel;
use cattaneo_core::sim::{l2_distance, l2_norm, write_front_csv, write_snapshots_csv, Mode, RunOutput};
use cattaneo_core::{Error, Scenario, Simulation};
use rayon::prelude::*;

pub use config::{Config, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("audit failed: {0}")]
    AuditFailed(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("cannot write {path}: {reason}")]
    Output { path: PathBuf, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 1,
            CliError::AuditFailed(_) => 2,
            CliError::Simulation(_) => 3,
        }
    }
}

/// Scenario and parameter problems are the config's fault; anything raised
/// while stepping is the simulator's.
fn sim_error(e: Error) -> CliError {
    match e {
        Error::InvalidScenario(_) | Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
        other => CliError::Simulation(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Audit,
    Simulate,
    Compare,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
        }
    }
}

pub const DEFAULT_OUT: &str = "out";

/// Loads `config_path`, applies the overrides and runs `command`. Returns
/// the lines to print on success.
pub fn execute(
    command: Command,
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let mut cfg = Config::load(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match command {
        Command::Audit => cmd_audit(&cfg, &out),
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Compare => cmd_compare(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out),
    }
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output { path: path.to_path_buf(), reason: e.to_string() }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| out_err(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| out_err(path, e))?;
    w.flush().map_err(|e| out_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| e.to_string())?;
        writeln!(w).map_err(|e| e.to_string())
    })
}

fn write_report(path: &Path, report: &AuditReport) -> Result<(), CliError> {
    let json = report.to_json().map_err(|e| out_err(path, e))?;
    write_file(path, |w| writeln!(w, "{json}").map_err(|e| e.to_string()))
}

pub fn cmd_audit(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let model = cfg.material.build()?;
    let block = cfg.audit_block();
    let acfg = block.to_audit_config(cfg.seed);
    acfg.validate().map_err(|e| CliError::Config(format!("audit: {e}")))?;
    create_dir(out)?;

    let mut reports = vec![("audit_report.json", coleman_noll_audit(&model, &acfg).map_err(sim_error)?)];
    if block.fourier {
        let fm = fourier_from_cattaneo(Arc::new(model));
        reports.push(("fourier_audit_report.json", fourier_audit(&fm, &acfg).map_err(sim_error)?));
    }
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (file, report) in &reports {
        let path = out.join(file);
        write_report(&path, report)?;
        let verdict = if report.passed() { "pass" } else { "FAIL" };
        lines.push(format!("{}: {verdict} ({} checks) -> {}", report.model, report.checks.len(), path.display()));
        for name in report.failed_checks() {
            failed.push(format!("{}: {name}", report.model));
        }
    }
    if failed.is_empty() {
        Ok(lines)
    } else {
        Err(CliError::AuditFailed(failed.join(", ")))
    }
}

fn simulate_one(model: Arc<dyn MaterialModel>, scenario: &Scenario) -> Result<RunOutput, CliError> {
    Simulation::new(scenario.clone(), model).map_err(sim_error)?.run().map_err(sim_error)
}

/// Writes `snapshots.csv`, `run_report.json` and `front.csv` into `dir`.
fn write_run(dir: &Path, run: &RunOutput) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("snapshots.csv"), |w| write_snapshots_csv(w, &run.snapshots).map_err(|e| e.to_string()))?;
    write_json(&dir.join("run_report.json"), &run.report)?;
    write_file(&dir.join("front.csv"), |w| write_front_csv(w, &run.front).map_err(|e| e.to_string()))
}

fn run_line(label: &str, run: &RunOutput) -> String {
    let r = &run.report;
    let speed = r.front_speed.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"));
    format!(
        "{label}: {} steps, front speed {speed}, min entropy production {:.3e}, energy residual {:.3e}",
        r.steps, r.min_entropy_production, r.energy_residual_rel
    )
}

pub fn cmd_simulate(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let scenario = cfg.scenario("simulate")?;
    let model: Arc<dyn MaterialModel> = Arc::new(cfg.material.build()?);
    let run = simulate_one(model, scenario)?;
    write_run(out, &run)?;
    Ok(vec![run_line(&format!("simulate -> {}", out.display()), &run)])
}

pub fn cmd_compare(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let scenario = cfg.scenario("compare")?;
    let block = cfg.compare.as_ref().ok_or_else(|| CliError::Config("`compare` needs a `compare` block".into()))?;
    if block.tau_factors.is_empty() || block.tau_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(CliError::Config("compare.tau_factors must be a non-empty list of positive numbers".into()));
    }
    let base = cfg.material.params.isotropic().tau;

    let mut fourier_sc = scenario.clone();
    fourier_sc.mode = Mode::Fourier;
    let fourier = simulate_one(Arc::new(cfg.material.build()?), &fourier_sc)?;
    write_run(&out.join("fourier"), &fourier)?;
    let dx = scenario.dx();
    let theta_f = &fourier.last().theta;
    let ambient = *fourier.snapshots[0].theta.last().expect("scenario has cells");
    let norm = l2_norm(theta_f, ambient, dx);

    let mut lines = vec![run_line("fourier", &fourier)];
    let mut rows = Vec::new();
    for (k, &factor) in block.tau_factors.iter().enumerate() {
        let mut material = cfg.material.clone();
        material.params.tau = Some(base * factor);
        material.params.tau_diag = material.params.tau_diag.map(|t| t.map(|v| v * factor));
        let mut sc = scenario.clone();
        sc.mode = Mode::Cattaneo;
        let run = simulate_one(Arc::new(material.build()?), &sc)?;
        write_run(&out.join(format!("tau_{k:02}")), &run)?;
        let d = l2_distance(&run.last().theta, theta_f, dx);
        let rel = if norm > 0.0 { d / norm } else { f64::NAN };
        lines.push(run_line(&format!("tau factor {factor}"), &run));
        rows.push([factor, base * factor, d, rel]);
    }
    let path = out.join("l2_distance.csv");
    write_file(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["tau_factor", "tau", "l2_distance", "relative"]).map_err(|e| e.to_string())?;
        for row in &rows {
            c.write_record(row.iter().map(|v| v.to_string())).map_err(|e| e.to_string())?;
        }
        c.flush().map_err(|e| e.to_string())
    })?;
    lines.push(format!("L2 distances -> {}", path.display()));
    Ok(lines)
}

pub fn cmd_sweep(cfg: &Config, out: &Path) -> Result<Vec<String>, CliError> {
    let scenario = cfg.scenario("sweep")?;
    let block = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("`sweep` needs a `sweep` block".into()))?;
    if block.values.is_empty() || block.jobs == 0 {
        return Err(CliError::Config("sweep needs at least one value and jobs >= 1".into()));
    }
    // Every variant must build before anything runs, so a bad value is a
    // config error rather than a half-written sweep.
    let variants = block
        .values
        .iter()
        .map(|&v| {
            let (m, s) = block.parameter.apply(&cfg.material, scenario, v);
            s.validate().map_err(sim_error)?;
            Ok((v, Arc::new(m.build()?) as Arc<dyn MaterialModel>, s))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    create_dir(out)?;

    let job = |k: usize, (_, model, sc): &(f64, Arc<dyn MaterialModel>, Scenario)| -> Result<RunOutput, CliError> {
        let run = simulate_one(Arc::clone(model), sc)?;
        write_run(&out.join(format!("run_{k:03}")), &run)?;
        Ok(run)
    };
    let results: Vec<_> = if block.jobs == 1 {
        variants.iter().enumerate().map(|(k, v)| job(k, v)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(block.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("sweep.jobs: {e}")))?;
        pool.install(|| variants.par_iter().enumerate().map(|(k, v)| job(k, v)).collect())
    };

    let name = block.parameter.name();
    let path = out.join("sweep_summary.csv");
    write_file(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["run", "parameter", "value", "front_speed", "max_entropy_violation", "energy_residual_rel", "status"])
            .map_err(|e| e.to_string())?;
        for (k, ((value, ..), res)) in variants.iter().zip(&results).enumerate() {
            let row = match res {
                Ok(run) => {
                    let r = &run.report;
                    [
                        format!("{k:03}"),
                        name.to_string(),
                        value.to_string(),
                        r.front_speed.map_or_else(String::new, |s| s.to_string()),
                        r.max_entropy_violation.to_string(),
                        r.energy_residual_rel.to_string(),
                        "ok".to_string(),
                    ]
                }
                Err(e) => [
                    format!("{k:03}"),
                    name.to_string(),
                    value.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ],
            };
            c.write_record(&row).map_err(|e| e.to_string())?;
        }
        c.flush().map_err(|e| e.to_string())
    })?;

    let failures: Vec<String> = results
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.as_ref().err().map(|e| format!("run_{k:03}: {e}")))
        .collect();
    if let Some(first) = results.iter().find_map(|r| r.as_ref().err()) {
        let msg = failures.join("; ");
        return Err(match first.exit_code() {
            3 => CliError::Simulation(msg),
            _ => CliError::Config(msg),
        });
    }
    Ok(vec![format!("{} runs over {name} -> {}", results.len(), path.display())])
}
