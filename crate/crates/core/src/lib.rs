//! Spectral-Galerkin laboratory for the Jordan-Moore-Gibson-Thompson equation
//! `τu_ttt + αu_tt = βΔu_t + γΔu + (f(u))_tt` with homogeneous Dirichlet data.
//!
//! The solution is expanded in Dirichlet eigenfunctions of the Laplacian on an
//! interval or box, the nonlinear term is projected pseudospectrally, and the
//! resulting ODE system is integrated with an adaptive Dormand-Prince scheme.
//! [`monitors`] evaluates energies and identity residuals along a run, and
//! [`certificate`] builds initial data that provably blow up before a given time.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod cli;
pub mod eigenbasis;
pub mod error;
pub mod galerkin;
pub mod integrator;
pub mod monitors;
pub mod nonlinearity;
pub mod quadrature;

pub use error::{Error, Result};
