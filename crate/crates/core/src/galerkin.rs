//! Spectral Galerkin system for `τ u_ttt + α u_tt = β Δu_t + γ Δu + (f(u))_tt`.
//!
//! The state carries the coefficients of `u`, `u_t`, `u_tt` and of the
//! running integrals `v = ∫_0^t u` and `w = ∫_0^t v`. Since the expanded
//! nonlinearity `f'(u) u_tt + f''(u) u_t²` contains no third time derivative,
//! the system is an explicit first-order ODE of dimension `5N`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eigenbasis::Basis;
use crate::error::{ensure_len, Error, Result};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { tau: 1.0, alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

impl ModelParams {
    pub fn new(tau: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = ModelParams { tau, alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau", self.tau), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be finite, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `B = 4γ²/β`.
    pub fn b_const(&self) -> f64 {
        4.0 * self.gamma * self.gamma / self.beta
    }

    /// `α - τγ/β`; positive in the exponentially stable regime.
    pub fn stability_margin(&self) -> f64 {
        self.alpha - self.tau * self.gamma / self.beta
    }
}

/// Time plus the five coefficient blocks `(u, u_t, u_tt, v, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub t: f64,
    n: usize,
    data: Vec<f64>,
}

impl SpectralState {
    pub fn zeros(n: usize) -> Self {
        SpectralState { t: 0.0, n, data: vec![0.0; 5 * n] }
    }

    /// Wraps a flat `[u, u_t, u_tt, v, w]` vector.
    pub fn from_flat(t: f64, data: Vec<f64>) -> Result<Self> {
        if data.is_empty() || !data.len().is_multiple_of(5) {
            return Err(Error::DimensionMismatch { expected: 5 * (data.len() / 5).max(1), found: data.len() });
        }
        Ok(SpectralState { t, n: data.len() / 5, data })
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    fn block(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    fn block_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn u(&self) -> &[f64] {
        self.block(0)
    }
    pub fn ut(&self) -> &[f64] {
        self.block(1)
    }
    pub fn utt(&self) -> &[f64] {
        self.block(2)
    }
    pub fn v(&self) -> &[f64] {
        self.block(3)
    }
    pub fn w(&self) -> &[f64] {
        self.block(4)
    }
    pub fn u_mut(&mut self) -> &mut [f64] {
        self.block_mut(0)
    }
    pub fn ut_mut(&mut self) -> &mut [f64] {
        self.block_mut(1)
    }
    pub fn utt_mut(&mut self) -> &mut [f64] {
        self.block_mut(2)
    }
    pub fn v_mut(&mut self) -> &mut [f64] {
        self.block_mut(3)
    }
    pub fn w_mut(&mut self) -> &mut [f64] {
        self.block_mut(4)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A scalar field, given by coefficients or by values at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Coefficients(Vec<f64>),
    Grid(Vec<f64>),
}

impl FieldData {
    pub fn zero(n: usize) -> Self {
        FieldData::Coefficients(vec![0.0; n])
    }
}

/// `z1 = τu2 + αu1 - βΔu0 - f'(u0)u1` and `z2 = τu1 + αu0 - f(u0)`, projected.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSources {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

/// `L²`, gradient and Laplacian norms of every state block, plus `‖u‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralNorms {
    pub u: [f64; 3],
    pub ut: [f64; 3],
    pub utt: [f64; 3],
    pub v: [f64; 3],
    pub w: [f64; 3],
    pub u_inf: f64,
}

/// The projected system on `V_N = span{e_1..e_N}`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    basis: Arc<Basis>,
    params: ModelParams,
    f: Nonlinearity,
}

impl GalerkinSystem {
    pub fn new(basis: Arc<Basis>, params: ModelParams, f: Nonlinearity) -> Result<Self> {
        params.validate()?;
        Ok(GalerkinSystem { basis, params, f })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn basis_arc(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    /// Coefficients of a field: grid data are L²-projected onto `V_N`.
    pub fn coefficients(&self, field: &FieldData) -> Result<Vec<f64>> {
        match field {
            FieldData::Coefficients(c) => {
                ensure_len(self.n_modes(), c.len())?;
                Ok(c.clone())
            }
            FieldData::Grid(g) => self.basis.project(g),
        }
    }

    /// Projected initial state at `t = 0` with `v = w = 0`.
    pub fn init_state(&self, u0: &FieldData, u1: &FieldData, u2: &FieldData) -> Result<SpectralState> {
        let mut s = SpectralState::zeros(self.n_modes());
        s.u_mut().copy_from_slice(&self.coefficients(u0)?);
        s.ut_mut().copy_from_slice(&self.coefficients(u1)?);
        s.utt_mut().copy_from_slice(&self.coefficients(u2)?);
        Ok(s)
    }

    /// `P[g(u, u_t, u_tt)]` for a pointwise combination `g`, evaluated pseudospectrally.
    pub fn project_pointwise(&self, state: &SpectralState, g: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let n = self.basis.n_nodes();
        let mut u = vec![0.0; n];
        let mut ut = vec![0.0; n];
        let mut utt = vec![0.0; n];
        self.basis.synthesize_into(state.u(), &mut u);
        self.basis.synthesize_into(state.ut(), &mut ut);
        self.basis.synthesize_into(state.utt(), &mut utt);
        for j in 0..n {
            u[j] = g(u[j], ut[j], utt[j]);
        }
        let mut out = vec![0.0; self.n_modes()];
        self.basis.project_into(&u, &mut out);
        out
    }

    /// `P[f'(u) u_tt + f''(u) u_t²]`, the projection of `(f(u))_tt`.
    pub fn forcing(&self, state: &SpectralState) -> Vec<f64> {
        if self.f.is_zero() {
            return vec![0.0; self.n_modes()];
        }
        let f = &self.f;
        self.project_pointwise(state, |u, ut, utt| f.d1(u) * utt + f.d2(u) * ut * ut)
    }

    /// `P[f(u)]`.
    pub fn projected_f(&self, state: &SpectralState) -> Vec<f64> {
        if self.f.is_zero() {
            return vec![0.0; self.n_modes()];
        }
        let f = &self.f;
        self.project_pointwise(state, |u, _, _| f.value(u))
    }

    /// `P[f'(u) u_t]`, the projection of `(f(u))_t`.
    pub fn projected_f_t(&self, state: &SpectralState) -> Vec<f64> {
        if self.f.is_zero() {
            return vec![0.0; self.n_modes()];
        }
        let f = &self.f;
        self.project_pointwise(state, |u, ut, _| f.d1(u) * ut)
    }

    /// Time derivative of the state.
    pub fn rhs(&self, state: &SpectralState) -> SpectralState {
        let mut d = SpectralState::zeros(self.n_modes());
        d.t = state.t;
        self.rhs_flat(state.as_flat(), d.as_flat_mut());
        d
    }

    /// Flat form of [`GalerkinSystem::rhs`]; `y` and `dy` have length `5N`.
    pub fn rhs_flat(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.n_modes();
        assert_eq!(y.len(), 5 * n);
        assert_eq!(dy.len(), 5 * n);
        let (a, rest) = y.split_at(n);
        let (b, rest) = rest.split_at(n);
        let (c, rest) = rest.split_at(n);
        let (va, _) = rest.split_at(n);
        let nonlinear = if self.f.is_zero() {
            vec![0.0; n]
        } else {
            let g = self.basis.n_nodes();
            let mut u = vec![0.0; g];
            let mut ut = vec![0.0; g];
            let mut utt = vec![0.0; g];
            self.basis.synthesize_into(a, &mut u);
            self.basis.synthesize_into(b, &mut ut);
            self.basis.synthesize_into(c, &mut utt);
            for j in 0..g {
                u[j] = self.f.d1(u[j]) * utt[j] + self.f.d2(u[j]) * ut[j] * ut[j];
            }
            let mut out = vec![0.0; n];
            self.basis.project_into(&u, &mut out);
            out
        };
        let ModelParams { tau, alpha, beta, gamma } = self.params;
        let lambda = self.basis.eigenvalues();
        let (da, rest) = dy.split_at_mut(n);
        let (db, rest) = rest.split_at_mut(n);
        let (dc, rest) = rest.split_at_mut(n);
        let (dva, dwa) = rest.split_at_mut(n);
        da.copy_from_slice(b);
        db.copy_from_slice(c);
        dva.copy_from_slice(a);
        dwa.copy_from_slice(va);
        for i in 0..n {
            dc[i] = (-alpha * c[i] - beta * lambda[i] * b[i] - gamma * lambda[i] * a[i] + nonlinear[i]) / tau;
        }
    }

    /// Lifted sources from the projected initial data held in a `t = 0` state.
    pub fn lifted_sources(&self, initial: &SpectralState) -> Result<LiftedSources> {
        ensure_len(self.n_modes(), initial.n_modes())?;
        let ModelParams { tau, alpha, beta, .. } = self.params;
        let lambda = self.basis.eigenvalues();
        let f_t = self.projected_f_t(initial);
        let f0 = self.projected_f(initial);
        let (u0, u1, u2) = (initial.u(), initial.ut(), initial.utt());
        let z1 = (0..self.n_modes()).map(|i| tau * u2[i] + alpha * u1[i] + beta * lambda[i] * u0[i] - f_t[i]).collect();
        let z2 = (0..self.n_modes()).map(|i| tau * u1[i] + alpha * u0[i] - f0[i]).collect();
        Ok(LiftedSources { z1, z2 })
    }

    pub fn spectral_norms(&self, state: &SpectralState) -> SpectralNorms {
        let b = &self.basis;
        let triple = |c: &[f64]| [b.l2_norm(c), b.grad_norm(c), b.lap_norm(c)];
        SpectralNorms {
            u: triple(state.u()),
            ut: triple(state.ut()),
            utt: triple(state.utt()),
            v: triple(state.v()),
            w: triple(state.w()),
            u_inf: b.linf_norm(state.u()),
        }
    }

    pub fn linf(&self, state: &SpectralState) -> f64 {
        self.basis.linf_norm(state.u())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::DomainSpec;
    use std::f64::consts::PI;

    fn system(n: usize, f: Nonlinearity, p: ModelParams) -> GalerkinSystem {
        GalerkinSystem::new(Arc::new(Basis::new(DomainSpec::interval(PI), n).unwrap()), p, f).unwrap()
    }

    fn sine_cube() -> f64 {
        (2.0 / PI).powf(1.5) * 4.0 / 3.0
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, -3.0, 1.0, 1.0).is_ok());
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert_eq!(ModelParams::new(1.0, 0.0, 1.0, 2.0).unwrap().b_const(), 16.0);
    }

    #[test]
    fn init_projects_data() {
        let s = system(4, Nonlinearity::zero(), ModelParams::default());
        let st = s
            .init_state(&FieldData::Coefficients(vec![5.0, 0.0, 0.0, 0.0]), &FieldData::zero(4), &FieldData::zero(4))
            .unwrap();
        assert_eq!(st.u(), &[5.0, 0.0, 0.0, 0.0]);
        assert!(st.ut().iter().chain(st.utt()).chain(st.v()).chain(st.w()).all(|v| *v == 0.0));
        assert_eq!(st.t, 0.0);
        assert!(s.init_state(&FieldData::zero(3), &FieldData::zero(4), &FieldData::zero(4)).is_err());
    }

    #[test]
    fn init_from_grid_parabola() {
        // ∫_0^π x(π-x) sin x dx = 4, so a_1 = 4 sqrt(2/π).
        let s = system(1, Nonlinearity::zero(), ModelParams::default());
        let g = s.basis().sample(|x| x[0] * (PI - x[0]));
        let st = s.init_state(&FieldData::Grid(g), &FieldData::zero(1), &FieldData::zero(1)).unwrap();
        assert!((st.u()[0] - 4.0 * (2.0 / PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rhs_linear_single_mode() {
        let s = system(1, Nonlinearity::zero(), ModelParams::default());
        let mut st = SpectralState::zeros(1);
        st.u_mut()[0] = 1.0;
        let d = s.rhs(&st);
        assert!((d.utt()[0] + 1.0).abs() < 1e-15);
        assert_eq!(d.u()[0], 0.0);
        assert_eq!(d.v()[0], 1.0);
    }

    #[test]
    fn rhs_quadratic_needs_time_derivatives() {
        let p = ModelParams::new(2.0, 1.0, 1.0, 3.0).unwrap();
        let s = system(1, Nonlinearity::quadratic(1.0).unwrap(), p);
        let mut st = SpectralState::zeros(1);
        st.u_mut()[0] = 1.7;
        let d = s.rhs(&st);
        assert!((d.utt()[0] + 3.0 * 1.7 / 2.0).abs() < 1e-14);

        let mut st = SpectralState::zeros(1);
        st.ut_mut()[0] = 1.0;
        let d = s.rhs(&st);
        let expected = (-1.0 + 2.0 * sine_cube()) / 2.0;
        assert!((d.utt()[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn lifted_sources_examples() {
        let p = ModelParams::new(1.5, 0.5, 2.0, 1.0).unwrap();
        let s = system(3, Nonlinearity::zero(), p);
        let mut st = SpectralState::zeros(3);
        st.u_mut().copy_from_slice(&[1.0, -2.0, 0.5]);
        let z = s.lifted_sources(&st).unwrap();
        for i in 0..3 {
            let l = s.basis().eigenvalues()[i];
            assert!((z.z1[i] - 2.0 * l * st.u()[i]).abs() < 1e-14);
            assert!((z.z2[i] - 0.5 * st.u()[i]).abs() < 1e-14);
        }

        let a = 1.3;
        let s = system(1, Nonlinearity::quadratic(1.0).unwrap(), ModelParams::default());
        let mut st = SpectralState::zeros(1);
        st.u_mut()[0] = a;
        let z = s.lifted_sources(&st).unwrap();
        assert!((z.z2[0] - (a - a * a * sine_cube())).abs() < 1e-14);
    }

    #[test]
    fn norms_from_coefficients() {
        let s = system(3, Nonlinearity::zero(), ModelParams::default());
        let mut st = SpectralState::zeros(3);
        st.u_mut()[0] = 1.0;
        let n = s.spectral_norms(&st);
        assert!((n.u[0] - 1.0).abs() < 1e-15 && (n.u[1] - 1.0).abs() < 1e-15 && (n.u[2] - 1.0).abs() < 1e-15);
        assert!((n.u_inf - (2.0 / PI).sqrt()).abs() < 1e-12);
        let mut st = SpectralState::zeros(3);
        st.u_mut()[1] = 1.0;
        let n = s.spectral_norms(&st);
        assert!((n.u[1] - 2.0).abs() < 1e-14 && (n.u[2] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn linear_rhs_has_no_mode_coupling() {
        let s = system(5, Nonlinearity::zero(), ModelParams::new(1.0, 0.3, 2.0, 0.7).unwrap());
        for k in 0..5 {
            let mut st = SpectralState::zeros(5);
            st.u_mut()[k] = 1.0;
            st.ut_mut()[k] = -2.0;
            st.utt_mut()[k] = 0.5;
            let d = s.rhs(&st);
            for i in (0..5).filter(|&i| i != k) {
                assert_eq!(d.utt()[i], 0.0);
                assert_eq!(d.u()[i], 0.0);
            }
        }
    }

    #[test]
    fn quadratic_projection_matches_triple_products() {
        // ∫_0^π sin(ix) sin(jx) sin(lx) dx via product-to-sum.
        fn s_int(p: i64) -> f64 {
            // ∫_0^π sin(p x) dx
            if p == 0 {
                0.0
            } else {
                (1.0 - (p as f64 * PI).cos()) / p as f64
            }
        }
        fn triple(i: i64, j: i64, l: i64) -> f64 {
            // sin a sin b sin c = ¼[sin(a+b-c) + sin(b+c-a) + sin(c+a-b) - sin(a+b+c)]
            (2.0 / PI).powf(1.5) * 0.25 * (s_int(i + j - l) + s_int(j + l - i) + s_int(l + i - j) - s_int(i + j + l))
        }
        let n = 6;
        let s = system(n, Nonlinearity::quadratic(1.0).unwrap(), ModelParams::default());
        let b = s.basis();
        for i in 0..n {
            for j in 0..n {
                let prod: Vec<f64> = b.mode_values(i).iter().zip(b.mode_values(j)).map(|(x, y)| x * y).collect();
                let proj = b.project(&prod).unwrap();
                for (l, p) in proj.iter().enumerate() {
                    let exact = triple(i as i64 + 1, j as i64 + 1, l as i64 + 1);
                    assert!((p - exact).abs() < 1e-12, "({i},{j},{l}) {p} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn projected_residual_is_zero_by_assembly() {
        let p = ModelParams::new(0.7, -0.4, 1.3, 2.1).unwrap();
        let s = system(6, Nonlinearity::exponential(0.8).unwrap(), p);
        let mut st = SpectralState::zeros(6);
        for i in 0..6 {
            st.u_mut()[i] = 0.3 / (i + 1) as f64;
            st.ut_mut()[i] = -0.2 * (i as f64).cos();
            st.utt_mut()[i] = 0.1 * i as f64;
        }
        let d = s.rhs(&st);
        let forcing = s.forcing(&st);
        let l = s.basis().eigenvalues();
        for i in 0..6 {
            let r =
                p.tau * d.utt()[i] + p.alpha * st.utt()[i] + p.beta * l[i] * st.ut()[i] + p.gamma * l[i] * st.u()[i]
                    - forcing[i];
            assert!(r.abs() < 1e-12, "mode {i}: {r}");
        }
    }
}
