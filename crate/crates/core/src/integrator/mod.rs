//! Adaptive time integration of the Galerkin system with blow-up detection.
//!
//! Blow-up is reported when the grid estimate of `‖u‖_∞` crosses `u_max`.
//! The crossing step is then bisected with sub-steps from its left end, so
//! the reported bracket `(t_lo, t_hi)` is never wider than the last accepted
//! step. The refinement assumes `‖u‖_∞` grows monotonically near the
//! threshold.

mod dopri;
mod modal;

pub use dopri::{error_norm, solve_adaptive, Dopri5, OdeSystem, PiController};
pub use modal::{characteristic_roots, linear_modal_solution, CONFLUENCE_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{GalerkinSystem, SpectralNorms, SpectralState};

impl OdeSystem for GalerkinSystem {
    fn dim(&self) -> usize {
        5 * self.n_modes()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.rhs_flat(y, dy);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Upper step bound; explicit stability requires roughly `dt ≲ 3/sqrt(βλ_N/τ)`.
    pub dt_max: f64,
    pub t_end: f64,
    /// `‖u‖_∞` blow-up threshold.
    pub u_max: f64,
    pub sample_dt: f64,
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_init: 1e-3,
            dt_min: 1e-13,
            dt_max: 0.1,
            t_end: 1.0,
            u_max: 1e6,
            sample_dt: 0.01,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(0.0 < self.dt_min && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.u_max > 0.0) {
            return bad("u_max must be positive");
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return bad("sample_dt must be positive");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    ReachedTEnd,
    BlowUpDetected,
    /// Step size fell below `dt_min` without a threshold crossing (unresolved growth).
    StepUnderflow,
    NonFinite,
}

impl RunStatus {
    pub fn is_numerical_failure(self) -> bool {
        matches!(self, RunStatus::StepUnderflow | RunStatus::NonFinite)
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub state: SpectralState,
    pub norms: SpectralNorms,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_final: f64,
    pub blowup_bracket: Option<(f64, f64)>,
    pub samples: Vec<Sample>,
    /// Last state below the threshold (`t_lo` for blow-up runs).
    pub last_state: SpectralState,
    pub last_dt: f64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub message: Option<String>,
}

/// One embedded step: the fifth-order state and the local error estimate.
pub fn step(system: &GalerkinSystem, state: &SpectralState, dt: f64) -> (SpectralState, Vec<f64>) {
    let n = system.dim();
    let mut k1 = vec![0.0; n];
    system.rhs_flat(state.as_flat(), &mut k1);
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    Dopri5::new(n).step(system, state.t, state.as_flat(), dt, &k1, &mut y_new, &mut err, &mut k7);
    let next = SpectralState::from_flat(state.t + dt, y_new).expect("state layout");
    (next, err)
}

/// Fixed-step integration for convergence studies.
pub fn integrate_fixed(
    system: &GalerkinSystem,
    state0: &SpectralState,
    dt: f64,
    steps: usize,
) -> Result<SpectralState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let n = system.dim();
    let mut stepper = Dopri5::new(n);
    let mut y = state0.as_flat().to_vec();
    let mut k1 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    system.rhs_flat(&y, &mut k1);
    for s in 0..steps {
        let t = state0.t + s as f64 * dt;
        stepper.step(system, t, &y, dt, &k1, &mut y_new, &mut err, &mut k7);
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut k7);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fixed-step integration diverged".into()));
    }
    SpectralState::from_flat(state0.t + steps as f64 * dt, y)
}

/// Integrates until `t_end`, a `u_max` crossing, or step-size underflow.
///
/// Steps are shortened to land on every multiple of `sample_dt`, so samples
/// are integrator states rather than interpolants.
pub fn integrate(system: &GalerkinSystem, state0: &SpectralState, config: &IntegratorConfig) -> Result<RunOutcome> {
    config.validate()?;
    if state0.n_modes() != system.n_modes() {
        return Err(Error::DimensionMismatch { expected: system.n_modes(), found: state0.n_modes() });
    }
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let linf0 = system.linf(state0);
    if linf0 >= config.u_max {
        return Err(Error::InvalidArgument(format!("initial ‖u‖∞ = {linf0} already exceeds u_max = {}", config.u_max)));
    }

    let n = system.dim();
    let t0 = state0.t;
    let t_end = t0 + config.t_end;
    let mut stepper = Dopri5::new(n);
    let mut ctrl = PiController::default();
    let mut y = state0.as_flat().to_vec();
    let mut k1 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    system.rhs_flat(&y, &mut k1);

    let mut samples = vec![Sample { state: state0.clone(), norms: system.spectral_norms(state0) }];
    let mut next_index: u64 = 1;
    let sample_time = |k: u64| t0 + k as f64 * config.sample_dt;

    let mut t = t0;
    let mut h = config.dt_init;
    let mut last_dt = 0.0;
    let mut accepted = 0u64;
    let mut rejected = 0u64;
    let mut saw_nonfinite;

    let finish = |status, t_final, bracket, samples, y: Vec<f64>, t_state, last_dt, acc, rej, msg| {
        Ok(RunOutcome {
            status,
            t_final,
            blowup_bracket: bracket,
            samples,
            last_state: SpectralState::from_flat(t_state, y).expect("state layout"),
            last_dt,
            accepted_steps: acc,
            rejected_steps: rej,
            message: msg,
        })
    };

    loop {
        if t >= t_end {
            return finish(RunStatus::ReachedTEnd, t, None, samples, y, t, last_dt, accepted, rejected, None);
        }
        if accepted + rejected >= config.max_steps {
            let msg = Some(format!("step budget {} exhausted at t = {t}", config.max_steps));
            return finish(RunStatus::StepUnderflow, t, None, samples, y, t, last_dt, accepted, rejected, msg);
        }
        let mut target = sample_time(next_index);
        if target >= t_end - 1e-9 * config.sample_dt {
            target = t_end;
        }
        let h_prop = h.min(config.dt_max);
        let clipped = t + h_prop >= target;
        let h_try = if clipped { target - t } else { h_prop };

        stepper.step(system, t, &y, h_try, &k1, &mut y_new, &mut err, &mut k7);
        let finite = y_new.iter().all(|v| v.is_finite());
        let en = if finite { error_norm(&err, &y, &y_new, config.rel_tol, config.abs_tol) } else { f64::NAN };
        saw_nonfinite = !en.is_finite();
        let (accept, h_next) = ctrl.control(en, h_try);

        if accept {
            let t_new = if clipped { target } else { t + h_try };
            let state_new = SpectralState::from_flat(t_new, y_new.clone()).expect("state layout");
            let linf = system.linf(&state_new);
            last_dt = h_try;
            accepted += 1;
            if linf >= config.u_max {
                let (lo, hi, y_lo) = refine_crossing(system, &mut stepper, t, &y, t_new, config.u_max);
                return finish(
                    RunStatus::BlowUpDetected,
                    hi,
                    Some((lo, hi)),
                    samples,
                    y_lo,
                    lo,
                    last_dt,
                    accepted,
                    rejected,
                    Some("bracket refinement assumes monotone ‖u‖∞ growth near the threshold".into()),
                );
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if clipped {
                samples.push(Sample { norms: system.spectral_norms(&state_new), state: state_new });
                next_index += 1;
            }
            h = if clipped { h_next.max(h_prop) } else { h_next };
        } else {
            rejected += 1;
            h = h_next;
        }
        if h < config.dt_min {
            let status = if saw_nonfinite { RunStatus::NonFinite } else { RunStatus::StepUnderflow };
            let msg = Some(format!("step size {h:e} below dt_min at t = {t}, ‖u‖∞ = {}", {
                let s = SpectralState::from_flat(t, y.clone()).expect("state layout");
                system.linf(&s)
            }));
            return finish(status, t, None, samples, y, t, last_dt, accepted, rejected, msg);
        }
    }
}

/// Bisects the step `(t_lo, t_hi]` for the first `‖u‖_∞ ≥ u_max`.
fn refine_crossing(
    system: &GalerkinSystem,
    stepper: &mut Dopri5,
    t_lo: f64,
    y_lo: &[f64],
    t_hi: f64,
    u_max: f64,
) -> (f64, f64, Vec<f64>) {
    let n = system.dim();
    let (mut lo, mut hi) = (t_lo, t_hi);
    let mut y = y_lo.to_vec();
    let mut k1 = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    for _ in 0..60 {
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        system.rhs_flat(&y, &mut k1);
        stepper.step(system, lo, &y, mid - lo, &k1, &mut trial, &mut err, &mut k7);
        let below = trial.iter().all(|v| v.is_finite()) && {
            let s = SpectralState::from_flat(mid, trial.clone()).expect("state layout");
            system.linf(&s) < u_max
        };
        if below {
            lo = mid;
            std::mem::swap(&mut y, &mut trial);
        } else {
            hi = mid;
        }
    }
    (lo, hi, y)
}
