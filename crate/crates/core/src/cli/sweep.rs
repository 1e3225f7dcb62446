//! Parallel parameter sweeps.

use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::integrator::RunStatus;
use crate::monitors::{classify_regime, StabilityRegime};

use super::config::{apply_parameter, SweepConfig};
use super::{output, simulate};

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: Vec<(String, f64)>,
    pub status: Option<RunStatus>,
    pub blowup_time: Option<f64>,
    pub t_final: f64,
    pub max_u_inf: f64,
    pub regime: Option<StabilityRegime>,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
    pub k0: Option<f64>,
    pub error: Option<String>,
}

fn run_point(cfg: &SweepConfig, point: &[(String, f64)]) -> SweepRow {
    let mut row = SweepRow {
        point: point.to_vec(),
        status: None,
        blowup_time: None,
        t_final: f64::NAN,
        max_u_inf: f64::NAN,
        regime: None,
        xi1: None,
        xi2: None,
        k0: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let mut run = cfg.base.clone();
        for (name, value) in point {
            apply_parameter(&mut run, name, *value)?;
        }
        row.regime = Some(classify_regime(&run.params));
        let sim = simulate(&run)?;
        row.status = Some(sim.outcome.status);
        row.t_final = sim.outcome.t_final;
        row.blowup_time = sim.outcome.blowup_bracket.map(|(_, hi)| hi);
        row.max_u_inf = sim.outcome.samples.iter().map(|s| s.norms.u_inf).fold(0.0, f64::max);
        if let Some(c) = &sim.certificate {
            row.xi1 = Some(c.xi1.value);
            row.xi2 = Some(c.xi2.value);
            row.k0 = Some(c.k0);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every grid point; failures are recorded per row rather than aborting the sweep.
pub fn run(cfg: &SweepConfig) -> Vec<SweepRow> {
    cfg.points().par_iter().map(|p| run_point(cfg, p)).collect()
}

pub fn write_summary(cfg: &SweepConfig, rows: &[SweepRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut header: Vec<&str> = cfg.grid.iter().map(|a| a.parameter.as_str()).collect();
    header.extend(["status", "t_final", "blowup_time", "max_u_inf", "regime", "xi1", "xi2", "K0", "error"]);
    let opt = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| format!("{v:?}"));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells: Vec<String> = r.point.iter().map(|(_, v)| format!("{v:?}")).collect();
            cells.push(match r.status {
                Some(s) => format!("{s:?}"),
                None => "failed".into(),
            });
            cells.push(format!("{:?}", r.t_final));
            cells.push(opt(r.blowup_time));
            cells.push(format!("{:?}", r.max_u_inf));
            cells.push(r.regime.map_or_else(String::new, |g| format!("{g:?}").to_lowercase()));
            cells.push(opt(r.xi1));
            cells.push(opt(r.xi2));
            cells.push(opt(r.k0));
            cells.push(r.error.clone().unwrap_or_default());
            cells
        })
        .collect();
    output::write_table(&dir.join("summary.csv"), &header, &table)
}
