//! Dormand-Prince 5(4) embedded pair with a PI step-size controller.

use crate::error::{Error, Result};

/// An autonomous or time-dependent first-order system `y' = F(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stage workspace for repeated steps on a system of fixed dimension.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    tmp: Vec<f64>,
}

impl Dopri5 {
    pub fn new(dim: usize) -> Self {
        Dopri5 {
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            k5: vec![0.0; dim],
            k6: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// One step of size `h` from `(t, y)` given `k1 = F(t, y)`.
    ///
    /// Writes the fifth-order solution to `y_new`, the local error estimate to
    /// `err` and `F(t + h, y_new)` to `k7` (first-same-as-last).
    #[allow(clippy::too_many_arguments)]
    pub fn step<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        h: f64,
        k1: &[f64],
        y_new: &mut [f64],
        err: &mut [f64],
        k7: &mut [f64],
    ) {
        let n = y.len();
        let Dopri5 { k2, k3, k4, k5, k6, tmp } = self;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, y_new, k7);
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
    }
}

/// Scaled RMS norm of the local error.
pub fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = abs_tol + rel_tol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// PI step-size control in the form used by DOPRI5.
#[derive(Debug, Clone)]
pub struct PiController {
    expo1: f64,
    beta: f64,
    safety: f64,
    /// Inverse of the smallest allowed step-size factor.
    facc1: f64,
    /// Inverse of the largest allowed step-size factor.
    facc2: f64,
    fac_old: f64,
    rejected_last: bool,
}

impl Default for PiController {
    fn default() -> Self {
        let beta = 0.04;
        PiController {
            expo1: 0.2 - 0.75 * beta,
            beta,
            safety: 0.9,
            facc1: 1.0 / 0.2,
            facc2: 1.0 / 10.0,
            fac_old: 1e-4,
            rejected_last: false,
        }
    }
}

impl PiController {
    /// Returns whether the step is accepted and the next step size.
    pub fn control(&mut self, err: f64, h: f64) -> (bool, f64) {
        if !err.is_finite() {
            self.rejected_last = true;
            return (false, 0.2 * h);
        }
        let fac11 = err.powf(self.expo1);
        let fac = fac11 / self.fac_old.powf(self.beta);
        let fac = self.facc2.max(self.facc1.min(fac / self.safety));
        let mut h_new = h / fac;
        if err <= 1.0 {
            self.fac_old = err.max(1e-4);
            if self.rejected_last {
                h_new = h_new.min(h);
            }
            self.rejected_last = false;
            (true, h_new)
        } else {
            h_new = h / self.facc1.min(fac11 / self.safety);
            self.rejected_last = true;
            (false, h_new)
        }
    }
}

/// Adaptive solve of `y' = F(t, y)` from `t0` to `t1` returning `y(t1)`.
pub fn solve_adaptive<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<f64>> {
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y0.len() });
    }
    let mut y = y0.to_vec();
    if t1 <= t0 {
        return Ok(y);
    }
    let mut stepper = Dopri5::new(n);
    let mut ctrl = PiController::default();
    let mut k1 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    sys.rhs(t0, &y, &mut k1);
    let mut t = t0;
    let mut h = ((t1 - t0) * 1e-3).max(1e-12);
    let h_min = 1e-14 * (t1 - t0).abs().max(1.0);
    for _ in 0..10_000_000u64 {
        if t >= t1 {
            return Ok(y);
        }
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        stepper.step(sys, t, &y, h_try, &k1, &mut y_new, &mut err, &mut k7);
        let en = error_norm(&err, &y, &y_new, rel_tol, abs_tol);
        let (accept, h_next) = ctrl.control(en, h_try);
        if accept && y_new.iter().all(|v| v.is_finite()) {
            t = if last { t1 } else { t + h_try };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            h = if last { h.max(h_next) } else { h_next };
        } else {
            h = if accept { 0.2 * h_try } else { h_next };
        }
        if h < h_min {
            return Err(Error::NonFinite(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::NonFinite("step budget exhausted".into()))
}
