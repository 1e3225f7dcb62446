//! C ABI over the `jmgt` laboratory.
//!
//! Every fallible call returns a [`JmgtStatus`]; on failure a message is kept per
//! thread and can be read with [`jmgt_last_error_message`]. Handles are opaque and
//! must be released with their matching `_free` function. Panics never cross the
//! boundary and are reported as [`JmgtStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jmgt::certificate::{guaranteed_existence_time, EmbeddingConstants};
use jmgt::cli::{self, RunConfig, Simulation};
use jmgt::galerkin::{FieldData, GalerkinSystem, ModelParams, SpectralState};
use jmgt::integrator::{linear_modal_solution, RunStatus};
use jmgt::monitors::{energy_f2, energy_fn};
use jmgt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JmgtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Hypothesis = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JmgtRunStatus {
    ReachedTEnd = 0,
    BlowUpDetected = 1,
    StepUnderflow = 2,
    NonFinite = 3,
}

/// Energies of one state with their coercivity gaps.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct JmgtEnergies {
    pub f_n: f64,
    pub f_n_gap: f64,
    pub f2: f64,
    pub f2_gap: f64,
}

/// Summary of a finished run. The bracket is meaningful only when `has_bracket` is 1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct JmgtRunInfo {
    pub status: JmgtRunStatus,
    pub t_final: f64,
    pub has_bracket: i32,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub n_samples: usize,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

/// A validated run configuration with its Galerkin system.
pub struct JmgtModel {
    config: RunConfig,
    system: GalerkinSystem,
}

/// A finished simulation with its samples and monitor records.
pub struct JmgtRun {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: JmgtStatus, msg: impl Into<String>) -> JmgtStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> JmgtStatus {
    match err {
        Error::Hypothesis { .. } => JmgtStatus::Hypothesis,
        Error::Config(_) | Error::Json(_) => JmgtStatus::Config,
        Error::InvalidDomain(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => {
            JmgtStatus::InvalidArgument
        }
        Error::Io(_) => JmgtStatus::Io,
        Error::NonFinite(_) | Error::Divergent(_) | Error::Quadrature(_) | Error::Certificate(_) => {
            JmgtStatus::Numerical
        }
    }
}

fn from_error(err: Error) -> JmgtStatus {
    fail(status_of(&err), err.to_string())
}

fn guard(f: impl FnOnce() -> JmgtStatus) -> JmgtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == JmgtStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(JmgtStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> &'a [f64] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, len)
    }
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> &'a mut [f64] {
    if len == 0 {
        &mut []
    } else {
        std::slice::from_raw_parts_mut(p, len)
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jmgt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn jmgt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `jmgt_*` function that documents an owned string and must
/// not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn jmgt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON run configuration and builds the model.
///
/// # Safety
/// `json` must be a valid NUL-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_new(json: *const c_char, out: *mut *mut JmgtModel) -> JmgtStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(JmgtStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(JmgtStatus::InvalidArgument, format!("config is not UTF-8: {e}")),
        };
        let built = RunConfig::from_json(text).and_then(|config| {
            let system = cli::build_system(&config)?;
            Ok(JmgtModel { config, system })
        });
        match built {
            Ok(m) => {
                *out = Box::into_raw(Box::new(m));
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`jmgt_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_free(model: *mut JmgtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of retained modes N; the flat state has length 5N. Returns 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_n_modes(model: *const JmgtModel) -> usize {
    model.as_ref().map_or(0, |m| m.system.n_modes())
}

/// Writes the flat initial state `[a, b, c, va, wa]` of the configured data into `out`.
/// Certified data are built by running the certificate.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_initial_state(model: *const JmgtModel, out: *mut f64, len: usize) -> JmgtStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        let n = 5 * m.system.n_modes();
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output buffer");
        }
        if len < n {
            return fail(JmgtStatus::BufferTooSmall, format!("need {n} doubles, got {len}"));
        }
        let data = match &m.config.initial_data {
            cli::InitialData::Certified { t0, margin } => {
                cli::certify_config(&m.config, &m.system, *t0, *margin).map(|c| (c.data.u0, c.data.u1, c.data.u2))
            }
            _ => Ok(m.config.explicit_data().expect("explicit data")),
        };
        let state = data.and_then(|(u0, u1, u2)| {
            m.system.init_state(
                &FieldData::Coefficients(u0),
                &FieldData::Coefficients(u1),
                &FieldData::Coefficients(u2),
            )
        });
        match state {
            Ok(s) => {
                slice_mut(out, n).copy_from_slice(s.as_flat());
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

unsafe fn read_state(m: &JmgtModel, t: f64, y: *const f64, len: usize) -> Result<SpectralState, JmgtStatus> {
    let n = 5 * m.system.n_modes();
    if y.is_null() {
        return Err(fail(JmgtStatus::NullPointer, "null state"));
    }
    if len != n {
        return Err(fail(JmgtStatus::InvalidArgument, format!("state length {len}, expected {n}")));
    }
    SpectralState::from_flat(t, slice(y, n).to_vec()).map_err(from_error)
}

/// Evaluates the Galerkin right-hand side at `(t, y)` into `dy`; both have length `len = 5N`.
///
/// # Safety
/// `y` and `dy` must each hold `len` doubles and must not overlap.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_rhs(
    model: *const JmgtModel,
    t: f64,
    y: *const f64,
    dy: *mut f64,
    len: usize,
) -> JmgtStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        let s = match read_state(m, t, y, len) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if dy.is_null() {
            return fail(JmgtStatus::NullPointer, "null output buffer");
        }
        m.system.rhs_flat(s.as_flat(), slice_mut(dy, len));
        JmgtStatus::Ok
    })
}

/// Energies of a flat state.
///
/// # Safety
/// `y` must hold `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_energies(
    model: *const JmgtModel,
    y: *const f64,
    len: usize,
    out: *mut JmgtEnergies,
) -> JmgtStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        let s = match read_state(m, 0.0, y, len) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let p = m.system.params();
        let res = energy_fn(m.system.basis(), &s, p).and_then(|a| Ok((a, energy_f2(m.system.basis(), &s, p)?)));
        match res {
            Ok((a, b)) => {
                *out = JmgtEnergies { f_n: a.value, f_n_gap: a.gap, f2: b.value, f2_gap: b.gap };
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Guaranteed local existence time for data of size `m` with the model's parameters.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_existence_time(model: *const JmgtModel, m: f64, out: *mut f64) -> JmgtStatus {
    guard(|| {
        let Some(model) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        let c = model.config.embedding.unwrap_or_else(|| EmbeddingConstants::for_basis(model.system.basis()));
        match guaranteed_existence_time(m, model.system.params(), model.system.nonlinearity(), &c) {
            Ok(b) => {
                *out = b.t_m;
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds a blow-up certificate for horizon `t0` and returns it as an owned JSON string.
///
/// # Safety
/// `out` must be valid; the string must be released with [`jmgt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn jmgt_model_certify(
    model: *const JmgtModel,
    t0: f64,
    margin: f64,
    out: *mut *mut c_char,
) -> JmgtStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        *out = ptr::null_mut();
        let json = cli::certify_config(&m.config, &m.system, t0, margin)
            .and_then(|c| serde_json::to_string(&c).map_err(Error::from));
        match json {
            Ok(s) => {
                *out = into_c_string(s);
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs the configured simulation with all monitors. Files are not written.
///
/// # Safety
/// `out` must be valid; the run must be released with [`jmgt_run_free`].
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_new(model: *const JmgtModel, out: *mut *mut JmgtRun) -> JmgtStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return fail(JmgtStatus::NullPointer, "null model") };
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        *out = ptr::null_mut();
        match cli::simulate(&m.config) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(JmgtRun { sim }));
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `run` must be NULL or a handle from [`jmgt_run_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_free(run: *mut JmgtRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_info(run: *const JmgtRun, out: *mut JmgtRunInfo) -> JmgtStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return fail(JmgtStatus::NullPointer, "null argument");
        };
        let o = &r.sim.outcome;
        let (lo, hi) = o.blowup_bracket.unwrap_or((f64::NAN, f64::NAN));
        *out = JmgtRunInfo {
            status: match o.status {
                RunStatus::ReachedTEnd => JmgtRunStatus::ReachedTEnd,
                RunStatus::BlowUpDetected => JmgtRunStatus::BlowUpDetected,
                RunStatus::StepUnderflow => JmgtRunStatus::StepUnderflow,
                RunStatus::NonFinite => JmgtRunStatus::NonFinite,
            },
            t_final: o.t_final,
            has_bracket: o.blowup_bracket.is_some() as i32,
            bracket_lo: lo,
            bracket_hi: hi,
            n_samples: o.samples.len(),
            accepted_steps: o.accepted_steps,
            rejected_steps: o.rejected_steps,
        };
        JmgtStatus::Ok
    })
}

/// Copies sample `index` into `t_out` and the flat state buffer `y_out` of length `len = 5N`.
///
/// # Safety
/// `t_out` must be valid and `y_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_sample(
    run: *const JmgtRun,
    index: usize,
    t_out: *mut f64,
    y_out: *mut f64,
    len: usize,
) -> JmgtStatus {
    guard(|| {
        let Some(r) = run.as_ref() else { return fail(JmgtStatus::NullPointer, "null run") };
        if t_out.is_null() || y_out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        let Some(s) = r.sim.outcome.samples.get(index) else {
            return fail(JmgtStatus::OutOfRange, format!("sample {index} of {}", r.sim.outcome.samples.len()));
        };
        let flat = s.state.as_flat();
        if len < flat.len() {
            return fail(JmgtStatus::BufferTooSmall, format!("need {} doubles, got {len}", flat.len()));
        }
        *t_out = s.state.t;
        slice_mut(y_out, flat.len()).copy_from_slice(flat);
        JmgtStatus::Ok
    })
}

/// The run report (outcome, monitor summary, config echo) as an owned JSON string.
///
/// # Safety
/// `out` must be valid; release the string with [`jmgt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_report_json(run: *const JmgtRun, out: *mut *mut c_char) -> JmgtStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return fail(JmgtStatus::NullPointer, "null argument");
        };
        match r.sim.report_json() {
            Ok(s) => {
                *out = into_c_string(s);
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The run's monitor time series as an owned CSV string.
///
/// # Safety
/// `out` must be valid; release the string with [`jmgt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn jmgt_run_csv(run: *const JmgtRun, out: *mut *mut c_char) -> JmgtStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return fail(JmgtStatus::NullPointer, "null argument");
        };
        let csv = cli::output::run_csv(&r.sim.monitors.records)
            .and_then(|b| String::from_utf8(b).map_err(|e| Error::NonFinite(e.to_string())));
        match csv {
            Ok(s) => {
                *out = into_c_string(s);
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Exact solution of one linear mode `τa‴ + αa″ + βλa′ + γλa = 0` from `(a, a′, a″)` at time 0.
/// Writes `(a, a′, a″)(t)` into `out[0..3]`.
///
/// # Safety
/// `out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn jmgt_modal_solution(
    tau: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    lambda: f64,
    a0: f64,
    b0: f64,
    c0: f64,
    t: f64,
    out: *mut f64,
) -> JmgtStatus {
    guard(|| {
        if out.is_null() {
            return fail(JmgtStatus::NullPointer, "null output");
        }
        let res =
            ModelParams::new(tau, alpha, beta, gamma).and_then(|p| linear_modal_solution(&p, lambda, (a0, b0, c0), t));
        match res {
            Ok((a, b, c)) => {
                slice_mut(out, 3).copy_from_slice(&[a, b, c]);
                JmgtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
