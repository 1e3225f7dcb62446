//! End-to-end acceptance criteria, each printed as a single pass/fail line.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use jmgt::certificate::{
    certify, comparison_solution, comparison_solution_numeric, compute_xi1, compute_xi1_generic, compute_xi2,
    compute_xi2_generic, guaranteed_existence_time, EmbeddingConstants,
};
use jmgt::eigenbasis::{Basis, DomainSpec};
use jmgt::galerkin::{FieldData, GalerkinSystem, ModelParams, SpectralState};
use jmgt::integrator::{integrate, integrate_fixed, linear_modal_solution, IntegratorConfig, RunStatus};
use jmgt::monitors::{energy_f2, energy_fn, monitor_samples, pair_difference_energy, MonitorToggles};
use jmgt::nonlinearity::Nonlinearity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: String, elapsed: Duration, limit: Duration) -> bool {
    let ok = ok && elapsed < limit;
    println!(
        "criterion {id:>2} {name:<28} {}  {detail}  [{:.2}s / {:.0}s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    ok
}

fn interval_system(n: usize, params: ModelParams, f: Nonlinearity) -> GalerkinSystem {
    let basis = Arc::new(Basis::new(DomainSpec::interval(PI), n).unwrap());
    GalerkinSystem::new(basis, params, f).unwrap()
}

fn state(sys: &GalerkinSystem, u0: Vec<f64>, u1: Vec<f64>, u2: Vec<f64>) -> SpectralState {
    sys.init_state(&FieldData::Coefficients(u0), &FieldData::Coefficients(u1), &FieldData::Coefficients(u2)).unwrap()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn moderate_data(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let u2 = vec![0.0; n];
    u0[0] = 0.5;
    u0[1] = -0.2;
    u0[2] = 0.1;
    u1[0] = 0.3;
    u1[1] = 0.1;
    (u0, u1, u2)
}

fn criterion_01_linear_oracle() -> bool {
    let start = Instant::now();
    let n = 8;
    let sys = interval_system(n, unit(), Nonlinearity::zero());
    let a0 = vec![1.0 / (n as f64).sqrt(); n];
    let s0 = state(&sys, a0.clone(), vec![0.0; n], vec![0.0; n]);
    let cfg = IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-12, t_end: 5.0, sample_dt: 0.05, ..Default::default() };
    let out = integrate(&sys, &s0, &cfg).unwrap();
    let lambda = sys.basis().eigenvalues();
    let mut worst = 0.0f64;
    for s in &out.samples {
        let exact: Vec<f64> = (0..n)
            .map(|i| linear_modal_solution(sys.params(), lambda[i], (a0[i], 0.0, 0.0), s.state.t).unwrap().0)
            .collect();
        let diff: Vec<f64> = s.state.u().iter().zip(&exact).map(|(a, b)| a - b).collect();
        worst = worst.max(l2(&diff) / l2(&exact));
    }
    let ok = out.status == RunStatus::ReachedTEnd && worst < 1e-6 && out.samples.len() == 101;
    report(1, "linear-oracle", ok, format!("max rel L2 error {worst:.3e}"), start.elapsed(), Duration::from_secs(10))
}

fn stability_run() -> (GalerkinSystem, jmgt::integrator::RunOutcome) {
    let n = 8;
    let p = ModelParams::new(1.0, 2.0, 1.0, 1.0).unwrap();
    let sys = interval_system(n, p, Nonlinearity::quadratic(1.0).unwrap());
    let mut u0 = vec![0.0; n];
    u0[0] = 1e-2;
    let s0 = state(&sys, u0, vec![0.0; n], vec![0.0; n]);
    let cfg = IntegratorConfig { t_end: 20.0, sample_dt: 0.1, ..Default::default() };
    let out = integrate(&sys, &s0, &cfg).unwrap();
    (sys, out)
}

fn identity_run() -> (GalerkinSystem, jmgt::integrator::RunOutcome) {
    let n = 12;
    let sys = interval_system(n, unit(), Nonlinearity::quadratic(1.0).unwrap());
    let (u0, u1, u2) = moderate_data(n);
    let s0 = state(&sys, u0, u1, u2);
    let cfg = IntegratorConfig { rel_tol: 1e-8, t_end: 1.0, sample_dt: 0.01, ..Default::default() };
    let out = integrate(&sys, &s0, &cfg).unwrap();
    (sys, out)
}

fn criterion_02_stability_regime() -> bool {
    let start = Instant::now();
    let (_, out) = stability_run();
    let first = out.samples.first().unwrap().norms.u_inf;
    let last = out.samples.last().unwrap().norms.u_inf;
    let ok = out.status == RunStatus::ReachedTEnd && (out.t_final - 20.0).abs() < 1e-9 && last < first;
    report(
        2,
        "stability-regime",
        ok,
        format!("|u(0)|inf {first:.3e} -> |u(20)|inf {last:.3e}"),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn criterion_03_energy_gaps() -> bool {
    let start = Instant::now();
    let n = 8;
    let basis = Basis::new(DomainSpec::interval(PI), n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let p = ModelParams::new(
            rng.gen_range(0.05..5.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.05..5.0),
            rng.gen_range(0.05..5.0),
        )
        .unwrap();
        for _ in 0..10_000 {
            let data = (0..5 * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let s = SpectralState::from_flat(0.0, data).unwrap();
            for e in [energy_fn(&basis, &s, &p).unwrap(), energy_f2(&basis, &s, &p).unwrap()] {
                worst = worst.min(e.gap / (1.0 + e.value.abs()));
            }
        }
    }
    report(
        3,
        "energy-gaps",
        worst >= -1e-12,
        format!("min gap/(1+|F|) {worst:.3e}"),
        start.elapsed(),
        Duration::from_secs(5),
    )
}

fn criterion_04_identity_residuals() -> bool {
    let start = Instant::now();
    let (sys, out) = identity_run();
    let rep = monitor_samples(&sys, &out.samples, &MonitorToggles::default(), true, None).unwrap();
    let r0 = &rep.records[0];
    let zero_at_start = r0.r01 == 0.0 && r0.r02 == 0.0 && r0.r41 == 0.0;
    let mut worst = 0.0f64;
    for r in &rep.records {
        worst =
            worst.max(r.r01 / (1.0 + r.scale01)).max(r.r02 / (1.0 + r.scale02)).max(r.r41.abs() / (1.0 + r.scale41));
    }
    let ok = out.status == RunStatus::ReachedTEnd && zero_at_start && worst < 1e-6;
    report(
        4,
        "identity-residuals",
        ok,
        format!("t=0 exact: {zero_at_start}, max residual/(1+scale) {worst:.3e}"),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn criterion_05_jensen() -> bool {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (sys, out) in [stability_run(), identity_run()] {
        let toggles = MonitorToggles { residuals: false, energy_rate: false, ..Default::default() };
        let rep = monitor_samples(&sys, &out.samples, &toggles, true, None).unwrap();
        for r in &rep.records {
            worst = worst.min(r.jensen_gap);
            count += 1;
        }
    }
    report(
        5,
        "jensen",
        worst >= -1e-10,
        format!("min gap {worst:.3e} over {count} samples"),
        start.elapsed(),
        Duration::from_secs(60),
    )
}

fn criterion_06_blowup_reproduction() -> bool {
    let start = Instant::now();
    let n = 16;
    let p = unit();
    let f = Nonlinearity::quadratic(1.0).unwrap();
    let sys = interval_system(n, p, f.clone());
    let cert = certify(sys.basis(), &p, &f, 1.0, 0.01, 1.0).unwrap();
    let thresholds_ok = (cert.xi1.raw - 4.0).abs() < 1e-8 && (cert.xi2.raw - 4.0).abs() < 1e-8;
    let s0 = state(&sys, cert.data.u0.clone(), cert.data.u1.clone(), cert.data.u2.clone());
    let cfg = IntegratorConfig { t_end: 1.0, sample_dt: 0.001, ..Default::default() };
    let out = integrate(&sys, &s0, &cfg).unwrap();
    let blew_up = out.status == RunStatus::BlowUpDetected;
    let bracket = out.blowup_bracket.unwrap_or((f64::NAN, f64::NAN));
    let kappa = sys.basis().kappa();
    let rep = monitor_samples(&sys, &out.samples, &MonitorToggles::default(), true, Some(cert.k0 / kappa)).unwrap();
    let y0 = rep.records[0].y;
    let mut odi_worst = f64::INFINITY;
    let mut cmp_worst = f64::INFINITY;
    let mut in_regime = 0;
    for r in rep.records.iter().filter(|r| r.in_regime) {
        in_regime += 1;
        odi_worst = odi_worst.min(r.odi_slack / (1.0 + f.value(r.y)));
        if let Some(y) = comparison_solution(&f, p.tau, y0, r.t).unwrap().finite() {
            cmp_worst = cmp_worst.min((r.y - y) / y);
        }
    }
    let ok = thresholds_ok
        && cert.checks.all()
        && blew_up
        && bracket.1 <= 1.0
        && in_regime > 0
        && odi_worst >= -1e-6
        && cmp_worst >= -1e-3;
    report(
        6,
        "blowup-reproduction",
        ok,
        format!(
            "xi1 {:.10} xi2 {:.10} K0 {:.4} bracket ({:.6}, {:.6}) odi {odi_worst:.3e} y/Y-1 {cmp_worst:.3e} over {in_regime} samples",
            cert.xi1.raw, cert.xi2.raw, cert.k0, bracket.0, bracket.1
        ),
        start.elapsed(),
        Duration::from_secs(60),
    )
}

fn criterion_07_certificate_oracles() -> bool {
    let start = Instant::now();
    let p = unit();
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
    for k in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let f = Nonlinearity::quadratic(k).unwrap();
        for t0 in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let a = compute_xi1(&f, t0, p.tau, 0.01, 1e-3).unwrap();
            let b = compute_xi1_generic(&f, t0, p.tau, 0.01, 1e-3).unwrap();
            worst = worst.max(rel(a.raw, b.raw));
            let a = compute_xi2(&f, &p, 1.0, t0, 0.01, 1e-3).unwrap();
            let b = compute_xi2_generic(&f, &p, 1.0, t0, 0.01, 1e-3).unwrap();
            worst = worst.max(rel(a.raw, b.raw));
            let y0 = 4.0 * t0;
            let a = comparison_solution(&f, p.tau, y0, 0.0).unwrap().blowup_time;
            let b = comparison_solution_numeric(&f, p.tau, y0, 0.0).unwrap().blowup_time;
            worst = worst.max(rel(a, b));
        }
    }
    report(
        7,
        "certificate-oracles",
        worst < 1e-8,
        format!("max relative deviation {worst:.3e}"),
        start.elapsed(),
        Duration::from_secs(5),
    )
}

fn analytic_data(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let u0 = (0..n).map(|i| 0.8 * (-(i as f64)).exp()).collect();
    let u1 = (0..n).map(|i| 0.4 * (-(i as f64)).exp() * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    (u0, u1, vec![0.0; n])
}

fn coefficient_distance(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..m).map(|i| (at(a, i) - at(b, i)).powi(2)).sum::<f64>().sqrt()
}

fn criterion_08_convergence() -> bool {
    let start = Instant::now();
    let t_end = 0.5;
    let f = Nonlinearity::quadratic(1.0).unwrap();

    let sys = interval_system(8, unit(), f.clone());
    let (u0, u1, u2) = analytic_data(8);
    let s0 = state(&sys, u0, u1, u2);
    let runs: Vec<SpectralState> =
        [40usize, 80, 160].iter().map(|&k| integrate_fixed(&sys, &s0, t_end / k as f64, k).unwrap()).collect();
    let d = |a: &SpectralState, b: &SpectralState| coefficient_distance(a.as_flat(), b.as_flat());
    let order = (d(&runs[0], &runs[1]) / d(&runs[1], &runs[2])).log2();

    let at_n = |n: usize| {
        let sys = interval_system(n, unit(), f.clone());
        let (u0, u1, u2) = analytic_data(n);
        let s0 = state(&sys, u0, u1, u2);
        let cfg = IntegratorConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            t_end,
            sample_dt: t_end,
            dt_max: 0.02,
            ..Default::default()
        };
        let out = integrate(&sys, &s0, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::ReachedTEnd);
        out.last_state.u().to_vec()
    };
    let (u8, u16, u32) = (at_n(8), at_n(16), at_n(32));
    let ratio = coefficient_distance(&u8, &u16) / coefficient_distance(&u16, &u32);
    let ok = (3.5..=5.5).contains(&order) && ratio >= 10.0;
    report(
        8,
        "convergence",
        ok,
        format!("temporal order {order:.3}, spectral ratio {ratio:.3e}"),
        start.elapsed(),
        Duration::from_secs(60),
    )
}

fn criterion_09_continuous_dependence() -> bool {
    let start = Instant::now();
    let n = 12;
    let sys = interval_system(n, unit(), Nonlinearity::quadratic(1.0).unwrap());
    let (u0, u1, u2) = moderate_data(n);
    let mut u0b = u0.clone();
    u0b[1] += 1e-6;
    let cfg = IntegratorConfig { t_end: 1.0, sample_dt: 0.02, rel_tol: 1e-11, abs_tol: 1e-14, ..Default::default() };
    let a = integrate(&sys, &state(&sys, u0, u1.clone(), u2.clone()), &cfg).unwrap();
    let b = integrate(&sys, &state(&sys, u0b, u1, u2), &cfg).unwrap();
    let mut sup_u = 0.0f64;
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        assert_eq!(sa.state.t, sb.state.t);
        let du: Vec<f64> = sa.state.u().iter().zip(sb.state.u()).map(|(x, y)| x - y).collect();
        sup_u = sup_u.max(l2(&du));
        let e = pair_difference_energy(sys.basis(), &sa.state, &sb.state, sys.params()).unwrap();
        ts.push(sa.state.t);
        logs.push(e.ln());
    }
    let m = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / m, logs.iter().sum::<f64>() / m);
    let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = ts.iter().zip(&logs).map(|(t, l)| (l - ml - slope * (t - mt)).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|l| (l - ml).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let ok = a.status == RunStatus::ReachedTEnd
        && b.status == RunStatus::ReachedTEnd
        && sup_u <= 1e-3
        && slope.is_finite()
        && r2.is_finite();
    report(
        9,
        "continuous-dependence",
        ok,
        format!("sup |U| {sup_u:.3e}, log F slope {slope:.3}, R^2 {r2:.4}"),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn criterion_10_existence_budget() -> bool {
    let start = Instant::now();
    let p = unit();
    let c = EmbeddingConstants::for_lambda1(1.0);
    let mut ok = true;
    let mut detail = String::new();
    for f in [Nonlinearity::zero(), Nonlinearity::quadratic(1.0).unwrap()] {
        let mut prev = f64::INFINITY;
        for m in [0.1, 1.0, 10.0] {
            let b = guaranteed_existence_time(m, &p, &f, &c).unwrap();
            let all = [b.c6, b.c7, b.c9, b.c10, b.c11, b.c15, b.t_m];
            ok &= all.iter().all(|v| v.is_finite() && *v > 0.0) && b.t_m < prev;
            prev = b.t_m;
            detail.push_str(&format!("{}:T({m})={:.3e} ", f.describe(), b.t_m));
        }
    }
    report(10, "existence-budget", ok, detail, start.elapsed(), Duration::from_secs(1))
}

fn main() {
    type Criterion = (&'static str, fn() -> bool);
    let criteria: [Criterion; 10] = [
        ("criterion_01_linear_oracle", criterion_01_linear_oracle),
        ("criterion_02_stability_regime", criterion_02_stability_regime),
        ("criterion_03_energy_gaps", criterion_03_energy_gaps),
        ("criterion_04_identity_residuals", criterion_04_identity_residuals),
        ("criterion_05_jensen", criterion_05_jensen),
        ("criterion_06_blowup_reproduction", criterion_06_blowup_reproduction),
        ("criterion_07_certificate_oracles", criterion_07_certificate_oracles),
        ("criterion_08_convergence", criterion_08_convergence),
        ("criterion_09_continuous_dependence", criterion_09_continuous_dependence),
        ("criterion_10_existence_budget", criterion_10_existence_budget),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let ok = std::panic::catch_unwind(run).unwrap_or_else(|_| {
            println!("{name} FAIL  panicked");
            false
        });
        if !ok {
            failed.push(name);
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
