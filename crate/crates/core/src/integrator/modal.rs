//! Exact solution of one mode of the linear equation `τ a''' + α a'' + βλ a' + γλ a = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::galerkin::ModelParams;

/// Root separation below which roots are treated as repeated.
pub const CONFLUENCE_TOL: f64 = 1e-9;

/// Roots of `τ s³ + α s² + βλ s + γλ`.
pub fn characteristic_roots(params: &ModelParams, lambda: f64) -> Result<[Complex64; 3]> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("eigenvalue must be positive, got {lambda}")));
    }
    params.validate()?;
    let p2 = params.alpha / params.tau;
    let p1 = params.beta * lambda / params.tau;
    let p0 = params.gamma * lambda / params.tau;
    Ok(monic_cubic_roots(p2, p1, p0))
}

/// Roots of `s³ + p2 s² + p1 s + p0` with real coefficients.
fn monic_cubic_roots(p2: f64, p1: f64, p0: f64) -> [Complex64; 3] {
    let p = |s: f64| ((s + p2) * s + p1) * s + p0;
    let dp = |s: f64| (3.0 * s + 2.0 * p2) * s + p1;
    let c = |s: f64| Complex64::new(s, 0.0);

    // Multiple real roots are located through the derivative, where bisection
    // would only resolve them to the cube or square root of round-off.
    let sc = 1.0 + p2.abs() + p1.abs().sqrt() + p0.abs().cbrt();
    let s_triple = -p2 / 3.0;
    if p(s_triple).abs() <= 1e-14 * sc.powi(3) && dp(s_triple).abs() <= 1e-14 * sc.powi(2) {
        return [c(s_triple); 3];
    }
    let dd = 4.0 * p2 * p2 - 12.0 * p1;
    if dd >= 0.0 {
        for sd in [(-2.0 * p2 + dd.sqrt()) / 6.0, (-2.0 * p2 - dd.sqrt()) / 6.0] {
            if p(sd).abs() <= 1e-14 * sc.powi(3) {
                return [c(sd), c(sd), c(-p2 - 2.0 * sd)];
            }
        }
    }

    // A real root exists inside the Cauchy bound.
    let bound = 1.0 + p2.abs().max(p1.abs()).max(p0.abs());
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * bound {
            break;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = dp(r);
        if d != 0.0 {
            let next = r - p(r) / d;
            if (next - r).abs() < 1e-3 * bound {
                r = next;
            }
        }
    }
    // Deflate: s² + q1 s + q0.
    let q1 = p2 + r;
    let q0 = p1 + r * q1;
    let disc = Complex64::new(q1 * q1 - 4.0 * q0, 0.0).sqrt();
    let s1 = if q1 >= 0.0 { (-q1 - disc) * 0.5 } else { (-q1 + disc) * 0.5 };
    let s2 = if s1.norm() > 0.0 { Complex64::new(q0, 0.0) / s1 } else { Complex64::new(0.0, 0.0) };
    let polish = |s: Complex64| {
        let mut s = s;
        for _ in 0..2 {
            let v = ((s + p2) * s + p1) * s + p0;
            let d = (s * 3.0 + 2.0 * p2) * s + p1;
            if d.norm() > 1e-300 {
                let next = s - v / d;
                if (next - s).norm() < 1e-6 * (1.0 + s.norm()) {
                    s = next;
                }
            }
        }
        s
    };
    [Complex64::new(r, 0.0), polish(s1), polish(s2)]
}

fn same(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < CONFLUENCE_TOL * (1.0 + a.norm().max(b.norm()))
}

/// Basis function `t^m e^{s t}` and its first two derivatives.
fn basis_fn(m: u32, s: Complex64, t: f64) -> [Complex64; 3] {
    let e = (s * t).exp();
    let mf = m as f64;
    let tp = |k: i32| if k < 0 { 0.0 } else { t.powi(k) };
    let mi = m as i32;
    let f0 = e * tp(mi);
    let f1 = e * (s * tp(mi) + mf * tp(mi - 1));
    let f2 = e * (s * s * tp(mi) + 2.0 * mf * s * tp(mi - 1) + mf * (mf - 1.0) * tp(mi - 2));
    [f0, f1, f2]
}

fn solve3(mut a: [[Complex64; 3]; 3], mut b: [Complex64; 3]) -> Result<[Complex64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap()).unwrap_or(col);
        if a[piv][col].norm() == 0.0 {
            return Err(Error::InvalidArgument("singular modal system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, v) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Exact `(a, a', a'')` at time `t` for initial values `(a0, b0, c0)`.
///
/// Distinct roots use exponentials; roots closer than [`CONFLUENCE_TOL`]
/// are merged into polynomial-times-exponential terms.
pub fn linear_modal_solution(
    params: &ModelParams,
    lambda: f64,
    initial: (f64, f64, f64),
    t: f64,
) -> Result<(f64, f64, f64)> {
    let roots = characteristic_roots(params, lambda)?;
    // Group roots into (root, multiplicity-power) basis terms.
    let mut terms: Vec<(u32, Complex64)> = Vec::with_capacity(3);
    let mut used = [false; 3];
    for i in 0..3 {
        if used[i] {
            continue;
        }
        let mut cluster = vec![roots[i]];
        used[i] = true;
        for j in i + 1..3 {
            if !used[j] && same(roots[i], roots[j]) {
                cluster.push(roots[j]);
                used[j] = true;
            }
        }
        let mean = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        for m in 0..cluster.len() as u32 {
            terms.push((m, mean));
        }
    }
    let mut mat = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (col, &(m, s)) in terms.iter().enumerate() {
        let f = basis_fn(m, s, 0.0);
        for row in 0..3 {
            mat[row][col] = f[row];
        }
    }
    let rhs = [Complex64::new(initial.0, 0.0), Complex64::new(initial.1, 0.0), Complex64::new(initial.2, 0.0)];
    let coef = solve3(mat, rhs)?;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (c, &(m, s)) in coef.iter().zip(&terms) {
        let f = basis_fn(m, s, t);
        for k in 0..3 {
            out[k] += c * f[k];
        }
    }
    Ok((out[0].re, out[1].re, out[2].re))
}
