//! Experiment runner behind the `jmgt` binary.
//!
//! Exit codes: 0 completed (blow-up detection included), 2 configuration or
//! hypothesis error, 3 numerical failure, 4 verification failure.

pub mod config;
pub mod output;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::certificate::{
    certify, guaranteed_existence_time, initial_data_bound, BlowUpCertificate, EmbeddingConstants, ExistenceBudget,
};
use crate::eigenbasis::Basis;
use crate::error::{Error, Result};
use crate::galerkin::{FieldData, GalerkinSystem};
use crate::integrator::{integrate, RunOutcome, RunStatus};
use crate::monitors::{monitor_samples, MonitorReport};

pub use config::{InitialData, Preset, RunConfig, SweepAxis, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Exit code for an error surfaced by a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidDomain(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::Hypothesis { .. }
        | Error::Config(_)
        | Error::Json(_) => EXIT_CONFIG,
        Error::NonFinite(_) | Error::Divergent(_) | Error::Quadrature(_) | Error::Certificate(_) | Error::Io(_) => {
            EXIT_NUMERICAL
        }
    }
}

/// Everything one simulation produces, before anything is written.
pub struct Simulation {
    pub config: RunConfig,
    pub system: GalerkinSystem,
    pub certificate: Option<BlowUpCertificate>,
    pub outcome: RunOutcome,
    pub monitors: MonitorReport,
    pub existence: Option<ExistenceBudget>,
}

pub fn build_system(cfg: &RunConfig) -> Result<GalerkinSystem> {
    let basis = match cfg.quad_nodes {
        Some(m) => Basis::with_nodes(cfg.domain.clone(), cfg.modes, m)?,
        None => Basis::new(cfg.domain.clone(), cfg.modes)?,
    };
    GalerkinSystem::new(Arc::new(basis), cfg.params, cfg.nonlinearity.build()?)
}

fn embedding(cfg: &RunConfig, basis: &Basis) -> EmbeddingConstants {
    cfg.embedding.unwrap_or_else(|| EmbeddingConstants::for_basis(basis))
}

pub fn certify_config(cfg: &RunConfig, system: &GalerkinSystem, t0: f64, margin: f64) -> Result<BlowUpCertificate> {
    certify(system.basis(), &cfg.params, system.nonlinearity(), t0, margin, cfg.xi0)
}

/// Runs the configured simulation and evaluates every enabled monitor.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    cfg.validate()?;
    let system = build_system(cfg)?;
    let (certificate, (u0, u1, u2)) = match &cfg.initial_data {
        InitialData::Certified { t0, margin } => {
            let cert = certify_config(cfg, &system, *t0, *margin)?;
            let data = (cert.data.u0.clone(), cert.data.u1.clone(), cert.data.u2.clone());
            (Some(cert), data)
        }
        _ => (None, cfg.explicit_data().expect("explicit data")),
    };
    let s0 = system.init_state(
        &FieldData::Coefficients(u0.clone()),
        &FieldData::Coefficients(u1.clone()),
        &FieldData::Coefficients(u2.clone()),
    )?;
    let m = initial_data_bound(system.basis(), &u0, &u1, &u2)?;
    let existence = if m > 0.0 {
        guaranteed_existence_time(m, &cfg.params, system.nonlinearity(), &embedding(cfg, system.basis())).ok()
    } else {
        None
    };
    let outcome = integrate(&system, &s0, &cfg.integrator)?;
    let convex = system.nonlinearity().check_hypotheses(cfg.xi0, 64).map(|h| h.convex).unwrap_or(false);
    let threshold = certificate.as_ref().map(|c| c.k0 / c.kappa);
    let monitors = monitor_samples(&system, &outcome.samples, &cfg.monitors, convex, threshold)?;
    Ok(Simulation { config: cfg.clone(), system, certificate, outcome, monitors, existence })
}

#[derive(Serialize)]
struct MonitorSummary<'a> {
    stability: crate::monitors::StabilityRegime,
    jensen_applicable: bool,
    odi_threshold: Option<f64>,
    min_energy_gap: f64,
    max_relative_residual: f64,
    min_jensen_gap: Option<f64>,
    min_odi_slack: Option<f64>,
    odi_violations: usize,
    notes: &'a [String],
}

#[derive(Serialize)]
struct RunReport<'a> {
    code_version: &'static str,
    csv_schema_version: u32,
    /// `smooth` for intervals; boxes have corners and are reported as a model-class extension.
    domain_class: &'static str,
    status: RunStatus,
    t_final: f64,
    blowup_bracket: Option<(f64, f64)>,
    samples: usize,
    accepted_steps: u64,
    rejected_steps: u64,
    last_dt: f64,
    message: Option<&'a str>,
    monitors: MonitorSummary<'a>,
    certificate: Option<&'a BlowUpCertificate>,
    existence_budget: Option<&'a ExistenceBudget>,
    config: &'a RunConfig,
}

impl Simulation {
    pub fn report_json(&self) -> Result<String> {
        let m = &self.monitors;
        let report = RunReport {
            code_version: env!("CARGO_PKG_VERSION"),
            csv_schema_version: output::CSV_SCHEMA_VERSION,
            domain_class: if self.config.domain.is_smooth() { "smooth" } else { "model-class extension" },
            status: self.outcome.status,
            t_final: self.outcome.t_final,
            blowup_bracket: self.outcome.blowup_bracket,
            samples: self.outcome.samples.len(),
            accepted_steps: self.outcome.accepted_steps,
            rejected_steps: self.outcome.rejected_steps,
            last_dt: self.outcome.last_dt,
            message: self.outcome.message.as_deref(),
            monitors: MonitorSummary {
                stability: m.stability,
                jensen_applicable: m.jensen_applicable,
                odi_threshold: m.odi_threshold,
                min_energy_gap: m.min_energy_gap,
                max_relative_residual: m.max_relative_residual,
                min_jensen_gap: m.min_jensen_gap,
                min_odi_slack: m.min_odi_slack,
                odi_violations: m.odi_violations,
                notes: &m.notes,
            },
            certificate: self.certificate.as_ref(),
            existence_budget: self.existence.as_ref(),
            config: &self.config,
        };
        Ok(serde_json::to_string_pretty(&report)? + "\n")
    }

    /// Writes `run.csv`, `fn_rate.csv`, `report.json`, `config.json` and the selected plots into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&self.config)? + "\n")?;
        std::fs::write(dir.join("run.csv"), output::run_csv(&self.monitors.records)?)?;
        std::fs::write(dir.join("fn_rate.csv"), output::rate_csv(&self.monitors.records)?)?;
        std::fs::write(dir.join("report.json"), self.report_json()?)?;
        let ts: Vec<f64> = self.monitors.records.iter().map(|r| r.t).collect();
        for name in &self.config.plots {
            let idx = output::COLUMNS.iter().position(|c| c == name).expect("validated column");
            let ys: Vec<f64> = self.monitors.records.iter().map(|r| output::column_values(r)[idx]).collect();
            let svg = output::svg_line_plot(name, "t", &ts, &ys);
            std::fs::write(dir.join(format!("{name}.svg")), svg)?;
        }
        Ok(())
    }
}

fn print_error(err: &Error) {
    let body = match err {
        Error::Hypothesis { hypothesis, sample } => serde_json::json!({
            "error": "hypothesis_failed",
            "hypothesis": hypothesis,
            "sample": sample,
            "message": err.to_string(),
        }),
        _ => serde_json::json!({ "error": err.to_string() }),
    };
    eprintln!("{body}");
}

/// `simulate --config <path>`.
pub fn cmd_simulate(config_path: &Path) -> i32 {
    let result = RunConfig::load(config_path).and_then(|cfg| {
        let sim = simulate(&cfg)?;
        let dir = cfg.resolved_output_dir();
        sim.write_artifacts(&dir)?;
        Ok((sim, dir))
    });
    match result {
        Ok((sim, dir)) => finish_simulation(&sim, &dir),
        Err(e) => {
            print_error(&e);
            exit_code(&e)
        }
    }
}

fn finish_simulation(sim: &Simulation, dir: &Path) -> i32 {
    let o = &sim.outcome;
    match o.blowup_bracket {
        Some((lo, hi)) => println!("status {:?}, blow-up in ({lo}, {hi}), artifacts in {}", o.status, dir.display()),
        None => println!("status {:?} at t = {}, artifacts in {}", o.status, o.t_final, dir.display()),
    }
    if o.status.is_numerical_failure() {
        eprintln!("{}", o.message.clone().unwrap_or_default());
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

/// `certify --config <path> [--run]`.
pub fn cmd_certify(config_path: &Path, run: bool) -> i32 {
    let result = (|| -> Result<(BlowUpCertificate, PathBuf, Option<Simulation>)> {
        let mut cfg = RunConfig::load(config_path)?;
        let (t0, margin) = match cfg.initial_data {
            InitialData::Certified { t0, margin } => (t0, margin),
            _ => return Err(Error::Config("certify needs initial_data of kind \"certified\"".into())),
        };
        let system = build_system(&cfg)?;
        let cert = certify_config(&cfg, &system, t0, margin)?;
        let dir = cfg.resolved_output_dir();
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&cert)? + "\n")?;
        let sim = if run {
            cfg.initial_data = InitialData::Certified { t0, margin };
            let sim = simulate(&cfg)?;
            sim.write_artifacts(&dir)?;
            Some(sim)
        } else {
            None
        };
        Ok((cert, dir, sim))
    })();
    match result {
        Ok((cert, dir, sim)) => {
            println!(
                "T0 {} xi1 {} xi2 {} K0 {} K1 {} K2 {} checks {}",
                cert.t0,
                cert.xi1.value,
                cert.xi2.value,
                cert.k0,
                cert.k1,
                cert.k2,
                if cert.checks.all() { "ok" } else { "FAILED" }
            );
            match sim {
                Some(sim) => finish_simulation(&sim, &dir),
                None => EXIT_OK,
            }
        }
        Err(e) => {
            print_error(&e);
            exit_code(&e)
        }
    }
}

/// `verify <suite>`.
pub fn cmd_verify(suite: &str) -> i32 {
    let results = match verify::run(suite) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("suites: {}", verify::SUITES.join(", "));
            return EXIT_CONFIG;
        }
    };
    let mut all = true;
    for r in &results {
        println!("{:<24} {}  {:>8.3}s  {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.seconds, r.detail);
        all &= r.passed;
    }
    if all {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

/// `sweep --config <path>`.
pub fn cmd_sweep(config_path: &Path) -> i32 {
    let result = SweepConfig::load(config_path).and_then(|cfg| {
        let rows = sweep::run(&cfg);
        let dir = config::resolve_output(&cfg.output_dir);
        sweep::write_summary(&cfg, &rows, &dir)?;
        Ok((rows, dir))
    });
    match result {
        Ok((rows, dir)) => {
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} runs ({failed} failed), summary in {}", rows.len(), dir.join("summary.csv").display());
            EXIT_OK
        }
        Err(e) => {
            print_error(&e);
            exit_code(&e)
        }
    }
}
