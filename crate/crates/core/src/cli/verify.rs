//! Built-in verification suites for `jmgt verify`.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::{
    certify, comparison_solution, comparison_solution_numeric, compute_xi1, compute_xi1_generic, compute_xi2,
    compute_xi2_generic, guaranteed_existence_time, EmbeddingConstants,
};
use crate::eigenbasis::{Basis, DomainSpec};
use crate::error::{Error, Result};
use crate::galerkin::{FieldData, GalerkinSystem, ModelParams, SpectralState};
use crate::integrator::{integrate, integrate_fixed, linear_modal_solution, IntegratorConfig, RunOutcome, RunStatus};
use crate::monitors::{energy_f2, energy_fn, monitor_samples, pair_difference_energy, MonitorToggles};
use crate::nonlinearity::Nonlinearity;

use super::output;

pub const SUITES: &[&str] = &[
    "linear-oracle",
    "stability",
    "energy-gaps",
    "identity-residuals",
    "jensen",
    "blowup",
    "certificate-oracle",
    "convergence",
    "continuous-dependence",
    "existence-budget",
    "csv-schema",
    "all",
];

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Runs one suite, or every suite for `all`.
pub fn run(suite: &str) -> Result<Vec<CheckResult>> {
    let names: Vec<&'static str> = match suite {
        "all" => SUITES.iter().copied().filter(|s| *s != "all").collect(),
        s => match SUITES.iter().find(|n| **n == s) {
            Some(n) => vec![*n],
            None => return Err(Error::InvalidArgument(format!("unknown suite '{s}'"))),
        },
    };
    Ok(names.into_iter().map(run_one).collect())
}

fn run_one(name: &'static str) -> CheckResult {
    let start = Instant::now();
    let result = match name {
        "linear-oracle" => linear_oracle(),
        "stability" => stability(),
        "energy-gaps" => energy_gaps(),
        "identity-residuals" => identity_residuals(),
        "jensen" => jensen(),
        "blowup" => blowup(),
        "certificate-oracle" => certificate_oracle(),
        "convergence" => convergence(),
        "continuous-dependence" => continuous_dependence(),
        "existence-budget" => existence_budget(),
        "csv-schema" => csv_schema(),
        _ => unreachable!("suite list and dispatch disagree"),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

type Check = Result<(bool, String)>;

fn interval_system(n: usize, params: ModelParams, f: Nonlinearity) -> Result<GalerkinSystem> {
    let basis = Arc::new(Basis::new(DomainSpec::interval(PI), n)?);
    GalerkinSystem::new(basis, params, f)
}

fn state(sys: &GalerkinSystem, u0: Vec<f64>, u1: Vec<f64>, u2: Vec<f64>) -> Result<SpectralState> {
    sys.init_state(&FieldData::Coefficients(u0), &FieldData::Coefficients(u1), &FieldData::Coefficients(u2))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit() -> ModelParams {
    ModelParams { tau: 1.0, alpha: 1.0, beta: 1.0, gamma: 1.0 }
}

fn moderate_data(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    u0[0] = 0.5;
    u0[1] = -0.2;
    u0[2] = 0.1;
    u1[0] = 0.3;
    u1[1] = 0.1;
    (u0, u1, vec![0.0; n])
}

fn linear_oracle() -> Check {
    let n = 8;
    let sys = interval_system(n, unit(), Nonlinearity::zero())?;
    let a0 = vec![1.0 / (n as f64).sqrt(); n];
    let s0 = state(&sys, a0.clone(), vec![0.0; n], vec![0.0; n])?;
    let cfg = IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-12, t_end: 5.0, sample_dt: 0.05, ..Default::default() };
    let out = integrate(&sys, &s0, &cfg)?;
    let lambda = sys.basis().eigenvalues();
    let mut worst = 0.0f64;
    for s in &out.samples {
        let mut exact = Vec::with_capacity(n);
        for i in 0..n {
            exact.push(linear_modal_solution(sys.params(), lambda[i], (a0[i], 0.0, 0.0), s.state.t)?.0);
        }
        let diff: Vec<f64> = s.state.u().iter().zip(&exact).map(|(a, b)| a - b).collect();
        worst = worst.max(l2(&diff) / l2(&exact));
    }
    Ok((out.status == RunStatus::ReachedTEnd && worst < 1e-6, format!("max rel L2 error {worst:.3e}")))
}

fn stability_run() -> Result<(GalerkinSystem, RunOutcome)> {
    let n = 8;
    let p = ModelParams { tau: 1.0, alpha: 2.0, beta: 1.0, gamma: 1.0 };
    let sys = interval_system(n, p, Nonlinearity::quadratic(1.0)?)?;
    let mut u0 = vec![0.0; n];
    u0[0] = 1e-2;
    let s0 = state(&sys, u0, vec![0.0; n], vec![0.0; n])?;
    let out = integrate(&sys, &s0, &IntegratorConfig { t_end: 20.0, sample_dt: 0.1, ..Default::default() })?;
    Ok((sys, out))
}

fn identity_run() -> Result<(GalerkinSystem, RunOutcome)> {
    let n = 12;
    let sys = interval_system(n, unit(), Nonlinearity::quadratic(1.0)?)?;
    let (u0, u1, u2) = moderate_data(n);
    let s0 = state(&sys, u0, u1, u2)?;
    let out =
        integrate(&sys, &s0, &IntegratorConfig { rel_tol: 1e-8, t_end: 1.0, sample_dt: 0.01, ..Default::default() })?;
    Ok((sys, out))
}

fn stability() -> Check {
    let (_, out) = stability_run()?;
    let first = out.samples.first().map_or(f64::NAN, |s| s.norms.u_inf);
    let last = out.samples.last().map_or(f64::NAN, |s| s.norms.u_inf);
    let ok = out.status == RunStatus::ReachedTEnd && (out.t_final - 20.0).abs() < 1e-9 && last < first;
    Ok((ok, format!("|u(0)|inf {first:.3e} -> |u(20)|inf {last:.3e}")))
}

fn energy_gaps() -> Check {
    let n = 8;
    let basis = Basis::new(DomainSpec::interval(PI), n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let p = ModelParams {
            tau: rng.gen_range(0.05..5.0),
            alpha: rng.gen_range(-2.0..2.0),
            beta: rng.gen_range(0.05..5.0),
            gamma: rng.gen_range(0.05..5.0),
        };
        for _ in 0..10_000 {
            let data = (0..5 * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let s = SpectralState::from_flat(0.0, data)?;
            for e in [energy_fn(&basis, &s, &p)?, energy_f2(&basis, &s, &p)?] {
                worst = worst.min(e.gap / (1.0 + e.value.abs()));
            }
        }
    }
    Ok((worst >= -1e-12, format!("min gap/(1+|F|) {worst:.3e}")))
}

fn identity_residuals() -> Check {
    let (sys, out) = identity_run()?;
    let rep = monitor_samples(&sys, &out.samples, &MonitorToggles::default(), true, None)?;
    let r0 = &rep.records[0];
    let exact_start = r0.r01 == 0.0 && r0.r02 == 0.0 && r0.r41 == 0.0;
    let worst = rep.records.iter().fold(0.0f64, |w, r| {
        w.max(r.r01 / (1.0 + r.scale01)).max(r.r02 / (1.0 + r.scale02)).max(r.r41.abs() / (1.0 + r.scale41))
    });
    let ok = out.status == RunStatus::ReachedTEnd && exact_start && worst < 1e-6;
    Ok((ok, format!("t=0 exact: {exact_start}, max residual/(1+scale) {worst:.3e}")))
}

fn jensen() -> Check {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (sys, out) in [stability_run()?, identity_run()?] {
        let toggles = MonitorToggles { residuals: false, energy_rate: false, ..Default::default() };
        let rep = monitor_samples(&sys, &out.samples, &toggles, true, None)?;
        for r in &rep.records {
            worst = worst.min(r.jensen_gap);
            count += 1;
        }
    }
    Ok((worst >= -1e-10, format!("min gap {worst:.3e} over {count} samples")))
}

fn blowup() -> Check {
    let p = unit();
    let f = Nonlinearity::quadratic(1.0)?;
    let sys = interval_system(16, p, f.clone())?;
    let cert = certify(sys.basis(), &p, &f, 1.0, 0.01, 1.0)?;
    let thresholds_ok = (cert.xi1.raw - 4.0).abs() < 1e-8 && (cert.xi2.raw - 4.0).abs() < 1e-8;
    let s0 = state(&sys, cert.data.u0.clone(), cert.data.u1.clone(), cert.data.u2.clone())?;
    let out = integrate(&sys, &s0, &IntegratorConfig { t_end: 1.0, sample_dt: 0.001, ..Default::default() })?;
    let bracket = out.blowup_bracket.unwrap_or((f64::NAN, f64::NAN));
    let threshold = cert.k0 / sys.basis().kappa();
    let rep = monitor_samples(&sys, &out.samples, &MonitorToggles::default(), true, Some(threshold))?;
    let y0 = rep.records[0].y;
    let (mut odi_worst, mut cmp_worst, mut in_regime) = (f64::INFINITY, f64::INFINITY, 0);
    for r in rep.records.iter().filter(|r| r.in_regime) {
        in_regime += 1;
        odi_worst = odi_worst.min(r.odi_slack / (1.0 + f.value(r.y)));
        if let Some(y) = comparison_solution(&f, p.tau, y0, r.t)?.finite() {
            cmp_worst = cmp_worst.min((r.y - y) / y);
        }
    }
    let ok = thresholds_ok
        && cert.checks.all()
        && out.status == RunStatus::BlowUpDetected
        && bracket.1 <= 1.0
        && in_regime > 0
        && odi_worst >= -1e-6
        && cmp_worst >= -1e-3;
    Ok((
        ok,
        format!(
            "K0 {:.4} bracket ({:.6}, {:.6}) odi {odi_worst:.3e} y/Y-1 {cmp_worst:.3e}",
            cert.k0, bracket.0, bracket.1
        ),
    ))
}

fn certificate_oracle() -> Check {
    let p = unit();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
    let mut worst = 0.0f64;
    for k in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let f = Nonlinearity::quadratic(k)?;
        for t0 in [0.25, 0.5, 1.0, 2.0, 4.0] {
            worst = worst.max(rel(
                compute_xi1(&f, t0, p.tau, 0.01, 1e-3)?.raw,
                compute_xi1_generic(&f, t0, p.tau, 0.01, 1e-3)?.raw,
            ));
            worst = worst.max(rel(
                compute_xi2(&f, &p, 1.0, t0, 0.01, 1e-3)?.raw,
                compute_xi2_generic(&f, &p, 1.0, t0, 0.01, 1e-3)?.raw,
            ));
            let y0 = 4.0 * t0;
            worst = worst.max(rel(
                comparison_solution(&f, p.tau, y0, 0.0)?.blowup_time,
                comparison_solution_numeric(&f, p.tau, y0, 0.0)?.blowup_time,
            ));
        }
    }
    Ok((worst < 1e-8, format!("max relative deviation {worst:.3e}")))
}

fn analytic_data(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let u0 = (0..n).map(|i| 0.8 * (-(i as f64)).exp()).collect();
    let u1 = (0..n).map(|i| 0.4 * (-(i as f64)).exp() * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    (u0, u1, vec![0.0; n])
}

fn padded_distance(a: &[f64], b: &[f64]) -> f64 {
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..a.len().max(b.len())).map(|i| (at(a, i) - at(b, i)).powi(2)).sum::<f64>().sqrt()
}

fn convergence() -> Check {
    let t_end = 0.5;
    let f = Nonlinearity::quadratic(1.0)?;
    let sys = interval_system(8, unit(), f.clone())?;
    let (u0, u1, u2) = analytic_data(8);
    let s0 = state(&sys, u0, u1, u2)?;
    let mut runs = Vec::new();
    for k in [40usize, 80, 160] {
        runs.push(integrate_fixed(&sys, &s0, t_end / k as f64, k)?);
    }
    let d = |a: &SpectralState, b: &SpectralState| padded_distance(a.as_flat(), b.as_flat());
    let order = (d(&runs[0], &runs[1]) / d(&runs[1], &runs[2])).log2();

    let at_n = |n: usize| -> Result<Vec<f64>> {
        let sys = interval_system(n, unit(), f.clone())?;
        let (u0, u1, u2) = analytic_data(n);
        let cfg = IntegratorConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            t_end,
            sample_dt: t_end,
            dt_max: 0.02,
            ..Default::default()
        };
        let out = integrate(&sys, &state(&sys, u0, u1, u2)?, &cfg)?;
        if out.status != RunStatus::ReachedTEnd {
            return Err(Error::NonFinite(format!("N = {n} run ended with {:?}", out.status)));
        }
        Ok(out.last_state.u().to_vec())
    };
    let (a, b, c) = (at_n(8)?, at_n(16)?, at_n(32)?);
    let ratio = padded_distance(&a, &b) / padded_distance(&b, &c);
    let ok = (3.5..=5.5).contains(&order) && ratio >= 10.0;
    Ok((ok, format!("temporal order {order:.3}, spectral ratio {ratio:.3e}")))
}

fn continuous_dependence() -> Check {
    let n = 12;
    let sys = interval_system(n, unit(), Nonlinearity::quadratic(1.0)?)?;
    let (u0, u1, u2) = moderate_data(n);
    let mut u0b = u0.clone();
    u0b[1] += 1e-6;
    let cfg = IntegratorConfig { t_end: 1.0, sample_dt: 0.02, rel_tol: 1e-11, abs_tol: 1e-14, ..Default::default() };
    let a = integrate(&sys, &state(&sys, u0, u1.clone(), u2.clone())?, &cfg)?;
    let b = integrate(&sys, &state(&sys, u0b, u1, u2)?, &cfg)?;
    let mut sup_u = 0.0f64;
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let du: Vec<f64> = sa.state.u().iter().zip(sb.state.u()).map(|(x, y)| x - y).collect();
        sup_u = sup_u.max(l2(&du));
        ts.push(sa.state.t);
        logs.push(pair_difference_energy(sys.basis(), &sa.state, &sb.state, sys.params())?.ln());
    }
    let m = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / m, logs.iter().sum::<f64>() / m);
    let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let ok = a.status == RunStatus::ReachedTEnd
        && b.status == RunStatus::ReachedTEnd
        && a.samples.len() == b.samples.len()
        && sup_u <= 1e-3
        && slope.is_finite();
    Ok((ok, format!("sup |U| {sup_u:.3e}, log F slope {slope:.3}")))
}

fn existence_budget() -> Check {
    let p = unit();
    let c = EmbeddingConstants::for_lambda1(1.0);
    let mut ok = true;
    let mut detail = String::new();
    for f in [Nonlinearity::zero(), Nonlinearity::quadratic(1.0)?] {
        let mut prev = f64::INFINITY;
        for m in [0.1, 1.0, 10.0] {
            let b = guaranteed_existence_time(m, &p, &f, &c)?;
            let all = [b.c6, b.c7, b.c9, b.c10, b.c11, b.c15, b.t_m];
            ok &= all.iter().all(|v| v.is_finite() && *v > 0.0) && b.t_m < prev;
            prev = b.t_m;
            detail.push_str(&format!("{}:T({m})={:.3e} ", f.describe(), b.t_m));
        }
    }
    Ok((ok, detail.trim_end().to_string()))
}

fn csv_schema() -> Check {
    let (sys, out) = identity_run()?;
    let rep = monitor_samples(&sys, &out.samples[..3], &MonitorToggles::default(), true, None)?;
    let text = String::from_utf8(output::run_csv(&rep.records)?).map_err(|e| Error::Config(e.to_string()))?;
    let mut lines = text.lines();
    let header_ok = lines.next() == Some(output::COLUMNS.join(",").as_str());
    let rows_ok = lines.all(|l| {
        let cells: Vec<&str> = l.split(',').collect();
        cells.len() == output::COLUMNS.len() && cells.iter().all(|c| c.parse::<f64>().is_ok())
    });
    Ok((header_ok && rows_ok, format!("schema v{} with {} columns", output::CSV_SCHEMA_VERSION, output::COLUMNS.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run("nope").is_err());
    }

    #[test]
    fn fast_suites_pass() {
        for s in ["certificate-oracle", "existence-budget", "csv-schema"] {
            let r = run(s).unwrap();
            assert!(r[0].passed, "{s}: {}", r[0].detail);
        }
    }
}
