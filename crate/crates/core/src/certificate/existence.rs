//! Guaranteed existence time of the Galerkin solutions for data of size `M`.

use serde::{Deserialize, Serialize};

use crate::eigenbasis::Basis;
use crate::error::{ensure_len, Error, Result};
use crate::galerkin::ModelParams;
use crate::nonlinearity::Nonlinearity;

/// Embedding constants: `‖φ‖∞ ≤ c1‖Δφ‖`, `‖φ‖₄ ≤ c2‖∇φ‖`, `‖∇φ‖₄ ≤ c3‖Δφ‖`,
/// `‖∇φ‖ ≤ c4‖Δφ‖`, `‖φ‖ ≤ c5‖∇φ‖`.
///
/// `c1..c3` are placeholders, not proven bounds. `c4 = c5 = λ1^{-1/2}` are
/// sharp on any domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl EmbeddingConstants {
    pub fn for_lambda1(lambda1: f64) -> Self {
        let p = lambda1.powf(-0.5);
        EmbeddingConstants { c1: 1.1, c2: 1.1, c3: 1.1, c4: p, c5: p }
    }

    pub fn for_basis(basis: &Basis) -> Self {
        Self::for_lambda1(basis.lambda1())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3), ("c4", self.c4), ("c5", self.c5)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("embedding constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for EmbeddingConstants {
    fn default() -> Self {
        Self::for_lambda1(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceBudget {
    pub m: f64,
    pub constants: EmbeddingConstants,
    pub b: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
    pub c14: f64,
    pub c15: f64,
    pub t_m: f64,
}

/// `‖Δu0‖ + ‖Δu1‖ + ‖∇u2‖` from coefficients.
pub fn initial_data_bound(basis: &Basis, u0: &[f64], u1: &[f64], u2: &[f64]) -> Result<f64> {
    for v in [u0, u1, u2] {
        ensure_len(basis.n_modes(), v.len())?;
    }
    Ok(basis.lap_norm(u0) + basis.lap_norm(u1) + basis.grad_norm(u2))
}

/// Evaluates the constant chain ending in `T(M) = 1/(2 c15)`.
pub fn guaranteed_existence_time(
    m: f64,
    params: &ModelParams,
    f: &Nonlinearity,
    constants: &EmbeddingConstants,
) -> Result<ExistenceBudget> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    params.validate()?;
    constants.validate()?;
    let ModelParams { tau, alpha, beta, gamma } = *params;
    let EmbeddingConstants { c1, c2, c3, c4, .. } = *constants;
    let b = params.b_const();
    let m2 = m * m;
    let c6 = (0.5 * tau + 0.5 * beta + gamma + 0.5 * b) * m2;
    let s = c6 + 1.0;
    let c7 = c1 * (4.0 * s / b).sqrt();
    let c8 = f.derivative_sup(c7);
    let c9 = (c8 + alpha.abs() + 3.0) * 2.0 * s / tau;
    let c10 = (gamma + 1.0) * 4.0 * s / beta;
    let c11 = 0.25 * b * b * 4.0 * s / b;
    let c12 = c1 * c1 * c4 * c4 * c8 * c8 * (4.0 * s / beta).powi(2);
    let c13 = 0.25 * c2 * c2 * c3 * c3 * c8 * c8 * (2.0 * s / tau) * (4.0 * s / b);
    let c14 = 0.25 * c1.powi(4) * c4 * c4 * c8 * c8 * (4.0 * s / beta).powi(2) * (4.0 * s / b);
    let c15 = c9 + c10 + c11 + c12 + c13 + c14;
    let t_m = 1.0 / (2.0 * c15);
    let out = ExistenceBudget { m, constants: *constants, b, c6, c7, c8, c9, c10, c11, c12, c13, c14, c15, t_m };
    if !(t_m > 0.0 && t_m.is_finite() && c15.is_finite()) {
        return Err(Error::NonFinite(format!("existence chain overflowed at M = {m}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_nonlinearity_is_finite() {
        let p = ModelParams::default();
        let e = guaranteed_existence_time(1.0, &p, &Nonlinearity::zero(), &EmbeddingConstants::default()).unwrap();
        assert_eq!(e.c8, 0.0);
        assert_eq!(e.c12, 0.0);
        // B = 4, c6 = (1/2 + 1/2 + 1 + 2) M² = 4.
        assert!((e.c6 - 4.0).abs() < 1e-14);
        assert!((e.c9 - 4.0 * 10.0).abs() < 1e-12);
        assert!((e.c10 - 40.0).abs() < 1e-12 && (e.c11 - 20.0).abs() < 1e-12);
        assert!((e.t_m - 1.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_c8_and_monotone_in_m() {
        let p = ModelParams::default();
        let f = Nonlinearity::quadratic(0.5).unwrap();
        let c = EmbeddingConstants::default();
        let e = guaranteed_existence_time(1.0, &p, &f, &c).unwrap();
        assert!((e.c8 - (2.0 * 0.5 * e.c7 + 1.0)).abs() < 1e-14);
        let mut prev = f64::INFINITY;
        for m in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let t = guaranteed_existence_time(m, &p, &f, &c).unwrap().t_m;
            assert!(t > 0.0 && t < prev);
            prev = t;
        }
        let e2 = guaranteed_existence_time(2.0, &p, &f, &c).unwrap();
        assert!((e2.c6 - 4.0 * e.c6).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::default();
        let c = EmbeddingConstants::default();
        assert!(guaranteed_existence_time(0.0, &p, &Nonlinearity::zero(), &c).is_err());
        let bad = EmbeddingConstants { c2: -1.0, ..c };
        assert!(guaranteed_existence_time(1.0, &p, &Nonlinearity::zero(), &bad).is_err());
    }
}
