//! Dirichlet eigenbasis of `-Δ` on intervals and tensor-product boxes,
//! the tensor Gauss-Legendre grid, and coefficient/grid transforms.
//!
//! Eigenfunctions are products of normalized sines,
//! `e_m(x) = Π_d sqrt(2/L_d) sin(m_d π x_d / L_d)`, with eigenvalue
//! `λ_m = Σ_d (m_d π / L_d)²`. Modes are ordered by eigenvalue with ties
//! broken by the lexicographic order of the index tuple.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Box2,
    Box3,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::Box2 => 2,
            DomainKind::Box3 => 3,
        }
    }
}

/// An interval or axis-aligned box `Π_d (0, L_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::interval(PI)
    }
}

impl DomainSpec {
    pub fn interval(length: f64) -> Self {
        DomainSpec { kind: DomainKind::Interval, lengths: vec![length] }
    }

    pub fn box2(lx: f64, ly: f64) -> Self {
        DomainSpec { kind: DomainKind::Box2, lengths: vec![lx, ly] }
    }

    pub fn box3(lx: f64, ly: f64, lz: f64) -> Self {
        DomainSpec { kind: DomainKind::Box3, lengths: vec![lx, ly, lz] }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() != self.dim() {
            return Err(Error::InvalidDomain(format!(
                "{:?} needs {} lengths, got {}",
                self.kind,
                self.dim(),
                self.lengths.len()
            )));
        }
        if let Some(l) = self.lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidDomain(format!("length {l} is not strictly positive")));
        }
        Ok(())
    }

    /// Box domains have corners; only the interval is a smooth domain.
    pub fn is_smooth(&self) -> bool {
        self.kind == DomainKind::Interval
    }
}

/// Tensor-product quadrature grid with `m` Gauss-Legendre nodes per axis.
#[derive(Debug, Clone)]
pub struct Grid {
    nodes_per_axis: usize,
    axis_nodes: Vec<Vec<f64>>,
    axis_weights: Vec<Vec<f64>>,
    /// `coords[d][j]` is coordinate `d` of node `j`.
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(domain: &DomainSpec, m: usize) -> Result<Grid> {
        domain.validate()?;
        if m == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node per axis".into()));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(m);
        let mut axis_nodes = Vec::with_capacity(domain.dim());
        let mut axis_weights = Vec::with_capacity(domain.dim());
        for &l in &domain.lengths {
            axis_nodes.push(ref_nodes.iter().map(|s| 0.5 * l * (1.0 + s)).collect::<Vec<_>>());
            axis_weights.push(ref_weights.iter().map(|w| 0.5 * l * w).collect::<Vec<_>>());
        }
        let dim = domain.dim();
        let total = m.pow(dim as u32);
        let mut coords = vec![Vec::with_capacity(total); dim];
        let mut weights = Vec::with_capacity(total);
        for j in 0..total {
            let mut rem = j;
            let mut w = 1.0;
            // Last axis varies fastest.
            for d in (0..dim).rev() {
                let jd = rem % m;
                rem /= m;
                w *= axis_weights[d][jd];
            }
            let mut rem = j;
            let mut idx = vec![0; dim];
            for d in (0..dim).rev() {
                idx[d] = rem % m;
                rem /= m;
            }
            for d in 0..dim {
                coords[d].push(axis_nodes[d][idx[d]]);
            }
            weights.push(w);
        }
        Ok(Grid { nodes_per_axis: m, axis_nodes, axis_weights, coords, weights })
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.axis_nodes[axis]
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.axis_weights[axis]
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[j]).collect()
    }

    /// Quadrature sum `Σ_j w_j g_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// The first `N` Dirichlet eigenpairs together with their grid tables.
#[derive(Debug, Clone)]
pub struct Basis {
    domain: DomainSpec,
    eigenvalues: Vec<f64>,
    mode_indices: Vec<Vec<usize>>,
    kappa: f64,
    grid: Grid,
    /// Row-major `N × G` table of `e_i` at the grid nodes.
    values: Vec<f64>,
    /// `values` multiplied by the quadrature weights.
    weighted: Vec<f64>,
    /// Per axis, the `N × G` table of `∂_d e_i` at the grid nodes.
    gradients: Vec<Vec<f64>>,
}

/// Default nodes per axis for a highest per-axis mode index `max_axis`.
///
/// Odd, so the midpoint of each axis is a node, and large enough that triple
/// products of retained modes integrate to round-off.
pub fn default_nodes_per_axis(max_axis: usize) -> usize {
    (4 * (max_axis + 1) + 1).max(17)
}

/// Smallest admissible nodes per axis for a highest per-axis mode index.
pub fn min_nodes_per_axis(max_axis: usize) -> usize {
    2 * max_axis + 2
}

fn enumerate_modes(domain: &DomainSpec, n: usize) -> Vec<(f64, Vec<usize>)> {
    let dim = domain.dim();
    let bound = n;
    let total = bound.pow(dim as u32);
    let mut modes = Vec::with_capacity(total);
    for j in 0..total {
        let mut rem = j;
        let mut idx = vec![0; dim];
        for d in (0..dim).rev() {
            idx[d] = rem % bound + 1;
            rem /= bound;
        }
        let lambda = idx.iter().zip(&domain.lengths).map(|(&m, &l)| (m as f64 * PI / l).powi(2)).sum::<f64>();
        modes.push((lambda, idx));
    }
    modes.sort_by(|a, b| {
        let scale = a.0.abs().max(b.0.abs());
        if (a.0 - b.0).abs() <= 1e-12 * scale {
            a.1.cmp(&b.1)
        } else {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal)
        }
    });
    modes.truncate(n);
    modes
}

impl Basis {
    /// First `n` eigenpairs with the default grid resolution.
    pub fn new(domain: DomainSpec, n: usize) -> Result<Basis> {
        domain.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("mode count N must be at least 1".into()));
        }
        let max_axis = enumerate_modes(&domain, n).iter().flat_map(|(_, idx)| idx.iter().copied()).max().unwrap_or(1);
        Basis::with_nodes(domain, n, default_nodes_per_axis(max_axis))
    }

    /// First `n` eigenpairs on a grid with `m` nodes per axis.
    pub fn with_nodes(domain: DomainSpec, n: usize, m: usize) -> Result<Basis> {
        domain.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("mode count N must be at least 1".into()));
        }
        let modes = enumerate_modes(&domain, n);
        let max_axis = modes.iter().flat_map(|(_, idx)| idx.iter().copied()).max().unwrap_or(1);
        if m < min_nodes_per_axis(max_axis) {
            return Err(Error::InvalidArgument(format!(
                "{m} nodes per axis is below the anti-aliasing bound {} for per-axis index {max_axis}",
                min_nodes_per_axis(max_axis)
            )));
        }
        let grid = Grid::new(&domain, m)?;
        let dim = domain.dim();
        let g = grid.len();

        // sine[d][k-1][jd] = sqrt(2/L) sin(kπx/L), cosine holds the derivative.
        let mut sine = Vec::with_capacity(dim);
        let mut dsine = Vec::with_capacity(dim);
        for d in 0..dim {
            let l = domain.lengths[d];
            let amp = (2.0 / l).sqrt();
            let xs = grid.axis_nodes(d);
            let s: Vec<Vec<f64>> =
                (1..=max_axis).map(|k| xs.iter().map(|x| amp * (k as f64 * PI * x / l).sin()).collect()).collect();
            let c: Vec<Vec<f64>> = (1..=max_axis)
                .map(|k| {
                    let freq = k as f64 * PI / l;
                    xs.iter().map(|x| amp * freq * (freq * x).cos()).collect()
                })
                .collect();
            sine.push(s);
            dsine.push(c);
        }

        let mut values = vec![0.0; n * g];
        let mut gradients = vec![vec![0.0; n * g]; dim];
        let mut axis_idx = vec![0usize; dim];
        for j in 0..g {
            let mut rem = j;
            for d in (0..dim).rev() {
                axis_idx[d] = rem % m;
                rem /= m;
            }
            for (i, (_, idx)) in modes.iter().enumerate() {
                let factors: Vec<f64> = (0..dim).map(|d| sine[d][idx[d] - 1][axis_idx[d]]).collect();
                values[i * g + j] = factors.iter().product();
                for d in 0..dim {
                    let mut p = dsine[d][idx[d] - 1][axis_idx[d]];
                    for (e, fac) in factors.iter().enumerate() {
                        if e != d {
                            p *= fac;
                        }
                    }
                    gradients[d][i * g + j] = p;
                }
            }
        }
        let weights = grid.weights();
        let weighted =
            values.chunks(g).flat_map(|row| row.iter().zip(weights).map(|(v, w)| v * w).collect::<Vec<_>>()).collect();

        // ∫_0^L sqrt(2/L) sin(πx/L) dx = sqrt(2/L) · 2L/π, per axis.
        let principal = &modes[0].1;
        let kappa = principal
            .iter()
            .zip(&domain.lengths)
            .map(|(&k, &l)| {
                let amp = (2.0 / l).sqrt();
                let kf = k as f64;
                amp * l * (1.0 - (kf * PI).cos()) / (kf * PI)
            })
            .product();

        let (eigenvalues, mode_indices) = modes.into_iter().unzip();
        Ok(Basis { domain, eigenvalues, mode_indices, kappa, grid, values, weighted, gradients })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn mode_indices(&self) -> &[Vec<usize>] {
        &self.mode_indices
    }

    /// `κ = ∫_Ω e_1`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    /// Grid values of mode `i` (zero-based).
    pub fn mode_values(&self, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[i * g..(i + 1) * g]
    }

    /// Grid values of `∂_axis e_i`.
    pub fn mode_gradient(&self, axis: usize, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.gradients[axis][i * g..(i + 1) * g]
    }

    /// Evaluate mode `i` at an arbitrary point.
    pub fn eval_mode(&self, i: usize, x: &[f64]) -> f64 {
        self.mode_indices[i]
            .iter()
            .zip(&self.domain.lengths)
            .zip(x)
            .map(|((&k, &l), &xd)| (2.0 / l).sqrt() * (k as f64 * PI * xd / l).sin())
            .product()
    }

    /// Evaluate `Σ a_i e_i` at an arbitrary point.
    pub fn eval(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        coeffs.iter().enumerate().map(|(i, a)| a * self.eval_mode(i, x)).sum()
    }

    /// Writes `Σ a_i e_i(x_j)` into `out`. Panics on size mismatch.
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let g = self.grid.len();
        assert_eq!(coeffs.len(), self.n_modes());
        assert_eq!(out.len(), g);
        synthesize_table(&self.values, g, coeffs, out);
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.n_modes(), coeffs.len())?;
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(coeffs, &mut out);
        Ok(out)
    }

    /// Grid values of `∂_axis Σ a_i e_i`.
    pub fn synthesize_gradient(&self, axis: usize, coeffs: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.n_modes(), coeffs.len())?;
        let g = self.grid.len();
        let mut out = vec![0.0; g];
        synthesize_table(&self.gradients[axis], g, coeffs, &mut out);
        Ok(out)
    }

    /// Writes the quadrature projections `⟨g, e_i⟩` into `out`. Panics on size mismatch.
    pub fn project_into(&self, grid_values: &[f64], out: &mut [f64]) {
        let g = self.grid.len();
        assert_eq!(grid_values.len(), g);
        assert_eq!(out.len(), self.n_modes());
        for (oi, row) in out.iter_mut().zip(self.weighted.chunks(g)) {
            *oi = row.iter().zip(grid_values).map(|(w, v)| w * v).sum();
        }
    }

    pub fn project(&self, grid_values: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.grid.len(), grid_values.len())?;
        let mut out = vec![0.0; self.n_modes()];
        self.project_into(grid_values, &mut out);
        Ok(out)
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let mut x = vec![0.0; self.grid.dim()];
        (0..self.grid.len())
            .map(|j| {
                for (d, xd) in x.iter_mut().enumerate() {
                    *xd = self.grid.coords(d)[j];
                }
                f(&x)
            })
            .collect()
    }

    pub fn quadrature(&self, grid_values: &[f64]) -> Result<f64> {
        ensure_len(self.grid.len(), grid_values.len())?;
        Ok(self.grid.integrate(grid_values))
    }

    /// `‖φ‖_{L²}` from coefficients.
    pub fn l2_norm(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `‖∇φ‖_{L²} = (Σ λ_i a_i²)^{1/2}`.
    pub fn grad_norm(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.eigenvalues).map(|(a, l)| l * a * a).sum::<f64>().sqrt()
    }

    /// `‖Δφ‖_{L²} = (Σ λ_i² a_i²)^{1/2}`.
    pub fn lap_norm(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.eigenvalues).map(|(a, l)| l * l * a * a).sum::<f64>().sqrt()
    }

    /// Grid estimate of `‖φ‖_{L∞}`.
    pub fn linf_norm(&self, coeffs: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.grid.len()];
        self.synthesize_into(coeffs, &mut buf);
        buf.iter().fold(0.0f64, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }
}

fn synthesize_table(table: &[f64], g: usize, coeffs: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (a, row) in coeffs.iter().zip(table.chunks(g)) {
        if *a == 0.0 {
            continue;
        }
        for (o, e) in out.iter_mut().zip(row) {
            *o += a * e;
        }
    }
}
