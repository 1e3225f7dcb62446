//! Blow-up thresholds, certified initial data and the comparison ODE.
//!
//! A certificate fixes a horizon `T0` and produces `K0, K1, K2` such that any
//! data with `∫u0 e1 > K0`, `∫u1 e1 > K1`, `∫u2 e1 > K2` cannot exist beyond
//! `T0`. `K1` depends on the chosen `u0` and `K2` on the chosen `(u0, u1)`, so
//! the data are built in that order and [`validate`] re-derives both.

mod existence;

pub use existence::{guaranteed_existence_time, initial_data_bound, EmbeddingConstants, ExistenceBudget};

use serde::{Deserialize, Serialize};

use crate::eigenbasis::Basis;
use crate::error::{ensure_len, Error, Result};
use crate::galerkin::ModelParams;
use crate::integrator::{solve_adaptive, OdeSystem};
use crate::nonlinearity::{BlowUpHypotheses, Nonlinearity};

/// Absolute floor added to `K1`, `K2` so they stay strictly positive.
pub const K_FLOOR: f64 = 1e-9;

/// Default relative margin on every strict inequality.
pub const DEFAULT_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    ClosedForm,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi1 {
    /// Root of `∫_ξ^∞ 1/f = T0/(4τ)`, before clamping and margin.
    pub raw: f64,
    pub value: f64,
    pub tail_at_value: f64,
    pub tail_bound: f64,
    pub method: ThresholdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi2 {
    /// Per-condition thresholds for `|α|`, `βλ1T0` and `γλ1T0²/2` times `ξ/f(ξ) ≤ 1/4`.
    pub conditions: [f64; 3],
    pub raw: f64,
    pub value: f64,
    pub method: ThresholdMethod,
}

fn check_margin(margin: f64) -> Result<()> {
    if margin > 0.0 && margin.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Smallest `ξ > 0` (to relative 1e-15) with `g(ξ) ≤ target`, for `g` eventually decreasing.
fn bisect_decreasing(g: impl Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let holds = |x: f64| -> Result<bool> { Ok(g(x)? <= target) };
    let (mut lo, mut hi) = (1.0, 1.0);
    if holds(1.0)? {
        let mut k = 0;
        while holds(lo)? {
            hi = lo;
            lo *= 0.5;
            k += 1;
            if k > 1100 {
                return Ok(0.0);
            }
        }
    } else {
        let mut k = 0;
        while !holds(hi)? {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > 1000 || !hi.is_finite() {
                return Err(Error::Certificate(format!("no threshold found below {hi:e}")));
            }
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `ξ1` with `∫_{ξ1}^∞ dξ/f < T0/(4τ)`, clamped to `ξ1 ≥ ξ0` and inflated by the margin.
pub fn compute_xi1(f: &Nonlinearity, t0: f64, tau: f64, margin: f64, xi0: f64) -> Result<Xi1> {
    xi1_with(f, t0, tau, margin, xi0, f.is_quadratic())
}

/// [`compute_xi1`] forced through bisection on the numerical tail integral.
pub fn compute_xi1_generic(f: &Nonlinearity, t0: f64, tau: f64, margin: f64, xi0: f64) -> Result<Xi1> {
    xi1_with(f, t0, tau, margin, xi0, false)
}

fn xi1_with(f: &Nonlinearity, t0: f64, tau: f64, margin: f64, xi0: f64, closed: bool) -> Result<Xi1> {
    check_positive("T0", t0)?;
    check_positive("tau", tau)?;
    check_positive("xi0", xi0)?;
    check_margin(margin)?;
    let bound = t0 / (4.0 * tau);
    let (raw, method) = match f.quadratic_coupling() {
        Some(k) if closed => (4.0 * tau / (k * t0), ThresholdMethod::ClosedForm),
        _ => {
            f.tail_integral_numeric(xi0)?;
            (bisect_decreasing(|x| f.tail_integral_numeric(x), bound)?, ThresholdMethod::Bisection)
        }
    };
    let value = raw.max(xi0) * (1.0 + margin);
    let tail_at_value = if closed { f.tail_integral(value)? } else { f.tail_integral_numeric(value)? };
    if !(tail_at_value < bound) {
        return Err(Error::Certificate(format!(
            "tail integral {tail_at_value} at ξ1 = {value} is not below T0/(4τ) = {bound}"
        )));
    }
    Ok(Xi1 { raw, value, tail_at_value, tail_bound: bound, method })
}

fn ratio(f: &Nonlinearity, x: f64) -> f64 {
    x / f.value(x)
}

/// `ξ2` such that all three ratio conditions hold for every `ξ ≥ ξ2`.
pub fn compute_xi2(
    f: &Nonlinearity,
    params: &ModelParams,
    lambda1: f64,
    t0: f64,
    margin: f64,
    xi0: f64,
) -> Result<Xi2> {
    xi2_with(f, params, lambda1, t0, margin, xi0, f.is_quadratic())
}

/// [`compute_xi2`] through bisection on `ξ/f(ξ)`.
pub fn compute_xi2_generic(
    f: &Nonlinearity,
    params: &ModelParams,
    lambda1: f64,
    t0: f64,
    margin: f64,
    xi0: f64,
) -> Result<Xi2> {
    xi2_with(f, params, lambda1, t0, margin, xi0, false)
}

fn xi2_with(
    f: &Nonlinearity,
    params: &ModelParams,
    lambda1: f64,
    t0: f64,
    margin: f64,
    xi0: f64,
    closed: bool,
) -> Result<Xi2> {
    params.validate()?;
    check_positive("lambda1", lambda1)?;
    check_positive("T0", t0)?;
    check_positive("xi0", xi0)?;
    check_margin(margin)?;
    let coeffs = ratio_coefficients(params, lambda1, t0);
    let mut conditions = [0.0; 3];
    for (slot, &c) in conditions.iter_mut().zip(&coeffs) {
        *slot = if c == 0.0 {
            0.0
        } else {
            match f.quadratic_coupling() {
                Some(k) if closed => 4.0 * c / k,
                _ => bisect_decreasing(|x| Ok(c * ratio(f, x)), 0.25)?,
            }
        };
    }
    let raw = conditions.iter().cloned().fold(0.0, f64::max);
    let value = raw.max(xi0) * (1.0 + margin);
    verify_ratio_conditions(f, &coeffs, value)?;
    let method = if closed && f.is_quadratic() { ThresholdMethod::ClosedForm } else { ThresholdMethod::Bisection };
    Ok(Xi2 { conditions, raw, value, method })
}

fn ratio_coefficients(params: &ModelParams, lambda1: f64, t0: f64) -> [f64; 3] {
    [params.alpha.abs(), params.beta * lambda1 * t0, 0.5 * params.gamma * lambda1 * t0 * t0]
}

/// Checks `c·ξ/f(ξ) ≤ 1/4` at `ξ2` and 10 log-spaced points up to `10⁶ ξ2`, and that
/// `ξ/f(ξ)` does not increase along them.
fn verify_ratio_conditions(f: &Nonlinearity, coeffs: &[f64; 3], xi2: f64) -> Result<()> {
    let mut prev = f64::INFINITY;
    for i in 0..=10 {
        let x = xi2 * 10f64.powf(0.6 * i as f64);
        let r = ratio(f, x);
        if r.is_nan() || r > prev * (1.0 + 1e-12) {
            return Err(Error::Certificate(format!("ξ/f(ξ) is not non-increasing beyond ξ2: {r} at ξ = {x}")));
        }
        prev = r;
        for &c in coeffs {
            if c * r > 0.25 * (1.0 + 1e-12) {
                return Err(Error::Certificate(format!("ratio condition fails at ξ = {x}: {c}·{r} > 1/4")));
            }
        }
    }
    Ok(())
}

pub fn compute_k0(xi1: f64, xi2: f64, kappa: f64) -> f64 {
    kappa * xi1.max(xi2)
}

fn weighted_first(basis: &Basis, values: impl Fn(usize) -> f64) -> f64 {
    let e1 = basis.mode_values(0);
    let w = basis.grid().weights();
    (0..basis.n_nodes()).map(|j| w[j] * e1[j] * values(j)).sum()
}

/// `K1 ≥ (−α∫u0 e1 + ∫f(u0)e1)/τ`, clamped at zero, inflated and floored.
pub fn compute_k1(u0: &[f64], params: &ModelParams, f: &Nonlinearity, basis: &Basis, margin: f64) -> Result<f64> {
    ensure_len(basis.n_modes(), u0.len())?;
    check_margin(margin)?;
    let u = basis.synthesize(u0)?;
    let fe = weighted_first(basis, |j| f.value(u[j]));
    let rhs = (-params.alpha * u0[0] + fe) / params.tau;
    Ok(rhs.max(0.0) * (1.0 + margin) + K_FLOOR)
}

/// `K2 ≥ (−α∫u1 e1 + β∫Δu0 e1 + ∫f'(u0)u1 e1)/τ`, clamped, inflated and floored.
pub fn compute_k2(
    u0: &[f64],
    u1: &[f64],
    params: &ModelParams,
    f: &Nonlinearity,
    basis: &Basis,
    margin: f64,
) -> Result<f64> {
    ensure_len(basis.n_modes(), u0.len())?;
    ensure_len(basis.n_modes(), u1.len())?;
    check_margin(margin)?;
    let g0 = basis.synthesize(u0)?;
    let g1 = basis.synthesize(u1)?;
    let fe = weighted_first(basis, |j| f.d1(g0[j]) * g1[j]);
    let rhs = (-params.alpha * u1[0] - params.beta * basis.lambda1() * u0[0] + fe) / params.tau;
    Ok(rhs.max(0.0) * (1.0 + margin) + K_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateChecks {
    pub tail_strict: bool,
    pub ratio_conditions: bool,
    pub k0_identity: bool,
    pub u0_exceeds_k0: bool,
    pub u1_exceeds_k1: bool,
    pub u2_exceeds_k2: bool,
    /// `K1`, `K2` re-derived from the stored data match the stored values.
    pub nested_order: bool,
}

impl CertificateChecks {
    pub fn all(&self) -> bool {
        self.tail_strict
            && self.ratio_conditions
            && self.k0_identity
            && self.u0_exceeds_k0
            && self.u1_exceeds_k1
            && self.u2_exceeds_k2
            && self.nested_order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpCertificate {
    pub t0: f64,
    pub xi0: f64,
    pub margin: f64,
    pub k_floor: f64,
    pub params: ModelParams,
    pub lambda1: f64,
    pub kappa: f64,
    pub nonlinearity: String,
    pub xi1: Xi1,
    pub xi2: Xi2,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub hypothesis_report: BlowUpHypotheses,
    pub data: CertifiedData,
    pub checks: CertificateChecks,
}

/// Builds `u0, u1, u2` along `e1` in the order `K0 → u0 → K1 → u1 → K2 → u2`.
pub fn make_certified_data(
    k0: f64,
    params: &ModelParams,
    f: &Nonlinearity,
    basis: &Basis,
    margin: f64,
) -> Result<(CertifiedData, f64, f64)> {
    check_margin(margin)?;
    let n = basis.n_modes();
    let along = |a: f64| {
        let mut v = vec![0.0; n];
        v[0] = a;
        v
    };
    let u0 = along(k0 * (1.0 + margin));
    let k1 = compute_k1(&u0, params, f, basis, margin)?;
    let u1 = along(k1 * (1.0 + margin));
    let k2 = compute_k2(&u0, &u1, params, f, basis, margin)?;
    let u2 = along(k2 * (1.0 + margin));
    if !(u0[0] > k0 && u1[0] > k1 && u2[0] > k2) {
        return Err(Error::Certificate("certified data do not exceed their thresholds".into()));
    }
    Ok((CertifiedData { u0, u1, u2 }, k1, k2))
}

/// Full certificate for horizon `t0`; refuses when a blow-up hypothesis fails.
pub fn certify(
    basis: &Basis,
    params: &ModelParams,
    f: &Nonlinearity,
    t0: f64,
    margin: f64,
    xi0: f64,
) -> Result<BlowUpCertificate> {
    params.validate()?;
    check_positive("T0", t0)?;
    check_margin(margin)?;
    let hyp = f.check_hypotheses(xi0, 64)?;
    hyp.require_all()?;
    if basis.mode_values(0).iter().any(|v| *v < 0.0) {
        return Err(Error::Certificate("principal mode is negative on the grid".into()));
    }
    let xi1 = compute_xi1(f, t0, params.tau, margin, xi0)?;
    let xi2 = compute_xi2(f, params, basis.lambda1(), t0, margin, xi0)?;
    let kappa = basis.kappa();
    let k0 = compute_k0(xi1.value, xi2.value, kappa);
    let (data, k1, k2) = make_certified_data(k0, params, f, basis, margin)?;
    let mut cert = BlowUpCertificate {
        t0,
        xi0,
        margin,
        k_floor: K_FLOOR,
        params: *params,
        lambda1: basis.lambda1(),
        kappa,
        nonlinearity: f.describe(),
        xi1,
        xi2,
        k0,
        k1,
        k2,
        hypothesis_report: hyp,
        data,
        checks: CertificateChecks {
            tail_strict: false,
            ratio_conditions: false,
            k0_identity: false,
            u0_exceeds_k0: false,
            u1_exceeds_k1: false,
            u2_exceeds_k2: false,
            nested_order: false,
        },
    };
    cert.checks = validate(&cert, basis, f)?;
    if !cert.checks.all() {
        return Err(Error::Certificate(format!("certificate failed its own checks: {:?}", cert.checks)));
    }
    Ok(cert)
}

/// Re-derives every inequality of a certificate against `basis` and `f`.
pub fn validate(cert: &BlowUpCertificate, basis: &Basis, f: &Nonlinearity) -> Result<CertificateChecks> {
    let n = basis.n_modes();
    for v in [&cert.data.u0, &cert.data.u1, &cert.data.u2] {
        ensure_len(n, v.len())?;
    }
    let tail = f.tail_integral(cert.xi1.value)?;
    let tail_strict = tail < cert.t0 / (4.0 * cert.params.tau);
    let coeffs = ratio_coefficients(&cert.params, basis.lambda1(), cert.t0);
    let ratio_conditions = verify_ratio_conditions(f, &coeffs, cert.xi2.value).is_ok();
    let k0 = compute_k0(cert.xi1.value, cert.xi2.value, basis.kappa());
    let k0_identity = (k0 - cert.k0).abs() <= 1e-14 * k0.abs();
    let k1 = compute_k1(&cert.data.u0, &cert.params, f, basis, cert.margin)?;
    let k2 = compute_k2(&cert.data.u0, &cert.data.u1, &cert.params, f, basis, cert.margin)?;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let nested_order = same(k1, cert.k1) && same(k2, cert.k2);
    Ok(CertificateChecks {
        tail_strict,
        ratio_conditions,
        k0_identity,
        u0_exceeds_k0: cert.data.u0[0] > cert.k0,
        u1_exceeds_k1: cert.data.u1[0] > k1,
        u2_exceeds_k2: cert.data.u2[0] > k2,
        nested_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonValue {
    Finite { y: f64 },
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSolution {
    pub value: ComparisonValue,
    /// `4τ ∫_{y0}^∞ dξ/f`.
    pub blowup_time: f64,
}

impl ComparisonSolution {
    pub fn finite(&self) -> Option<f64> {
        match self.value {
            ComparisonValue::Finite { y } => Some(y),
            ComparisonValue::Diverged => None,
        }
    }
}

struct ComparisonOde<'a> {
    f: &'a Nonlinearity,
    tau: f64,
}

impl OdeSystem for ComparisonOde<'_> {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = self.f.value(y[0]) / (4.0 * self.tau);
    }
}

/// `Y(t)` for `Y' = f(Y)/(4τ)`, `Y(0) = y0`.
pub fn comparison_solution(f: &Nonlinearity, tau: f64, y0: f64, t: f64) -> Result<ComparisonSolution> {
    comparison_with(f, tau, y0, t, f.is_quadratic())
}

/// [`comparison_solution`] through numerical quadrature and adaptive integration.
pub fn comparison_solution_numeric(f: &Nonlinearity, tau: f64, y0: f64, t: f64) -> Result<ComparisonSolution> {
    comparison_with(f, tau, y0, t, false)
}

fn comparison_with(f: &Nonlinearity, tau: f64, y0: f64, t: f64, closed: bool) -> Result<ComparisonSolution> {
    check_positive("tau", tau)?;
    check_positive("y0", y0)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be non-negative, got {t}")));
    }
    if !(f.value(y0) > 0.0) {
        return Err(Error::InvalidArgument(format!("f(y0) = {} must be positive", f.value(y0))));
    }
    match f.quadratic_coupling() {
        Some(k) if closed => {
            let blowup_time = 4.0 * tau / (k * y0);
            let value = if t < blowup_time {
                ComparisonValue::Finite { y: y0 / (1.0 - k * y0 * t / (4.0 * tau)) }
            } else {
                ComparisonValue::Diverged
            };
            Ok(ComparisonSolution { value, blowup_time })
        }
        _ => {
            let blowup_time = 4.0 * tau * f.tail_integral_numeric(y0)?;
            if t >= blowup_time {
                return Ok(ComparisonSolution { value: ComparisonValue::Diverged, blowup_time });
            }
            let sys = ComparisonOde { f, tau };
            let value = match solve_adaptive(&sys, 0.0, &[y0], t, 1e-13, 1e-300) {
                Ok(y) if y[0].is_finite() => ComparisonValue::Finite { y: y[0] },
                _ => ComparisonValue::Diverged,
            };
            Ok(ComparisonSolution { value, blowup_time })
        }
    }
}
