use std::f64::consts::PI;
use std::sync::Arc;

use jmgt::certificate::{certify, comparison_solution};
use jmgt::cli::output::{run_csv, COLUMNS};
use jmgt::eigenbasis::{Basis, DomainSpec};
use jmgt::galerkin::{GalerkinSystem, ModelParams, SpectralState};
use jmgt::integrator::{characteristic_roots, linear_modal_solution};
use jmgt::monitors::{energy_f2, energy_fn, pair_difference_energy};
use jmgt::nonlinearity::Nonlinearity;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.1f64..4.0, -3.0f64..3.0, 0.1f64..4.0, 0.1f64..4.0).prop_map(|(tau, alpha, beta, gamma)| ModelParams {
        tau,
        alpha,
        beta,
        gamma,
    })
}

fn box_basis() -> Basis {
    Basis::new(DomainSpec::box2(PI, 2.0), 6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn project_inverts_synthesize(coeffs in prop::collection::vec(-5.0f64..5.0, 6)) {
        let basis = box_basis();
        let back = basis.project(&basis.synthesize(&coeffs).unwrap()).unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn energy_gaps_are_nonnegative(p in params(), data in prop::collection::vec(-20.0f64..20.0, 30)) {
        let basis = box_basis();
        let s = SpectralState::from_flat(0.0, data).unwrap();
        for e in [energy_fn(&basis, &s, &p).unwrap(), energy_f2(&basis, &s, &p).unwrap()] {
            prop_assert!(e.gap >= -1e-12 * (1.0 + e.value.abs()));
        }
    }

    #[test]
    fn pair_energy_is_symmetric_and_zero_on_diagonal(
        p in params(),
        a in prop::collection::vec(-3.0f64..3.0, 30),
        b in prop::collection::vec(-3.0f64..3.0, 30),
    ) {
        let basis = box_basis();
        let sa = SpectralState::from_flat(0.0, a).unwrap();
        let sb = SpectralState::from_flat(0.0, b).unwrap();
        let ab = pair_difference_energy(&basis, &sa, &sb, &p).unwrap();
        let ba = pair_difference_energy(&basis, &sb, &sa, &p).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
        prop_assert_eq!(pair_difference_energy(&basis, &sa, &sa, &p).unwrap(), 0.0);
    }

    #[test]
    fn characteristic_roots_solve_the_cubic(p in params(), lambda in 0.5f64..50.0) {
        for s in characteristic_roots(&p, lambda).unwrap() {
            let r = p.tau * s * s * s + p.alpha * s * s + p.beta * lambda * s + p.gamma * lambda;
            let scale = p.tau * s.norm().powi(3) + p.alpha.abs() * s.norm_sqr() + p.beta * lambda * s.norm() + p.gamma * lambda;
            prop_assert!(r.norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn modal_solution_matches_initial_data(p in params(), lambda in 0.5f64..20.0, a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let (x, y, z) = linear_modal_solution(&p, lambda, (a, b, c), 0.0).unwrap();
        prop_assert!((x - a).abs() < 1e-9 && (y - b).abs() < 1e-9 && (z - c).abs() < 1e-9);
    }

    #[test]
    fn zero_nonlinearity_rhs_is_linear(
        p in params(),
        x in prop::collection::vec(-2.0f64..2.0, 30),
        y in prop::collection::vec(-2.0f64..2.0, 30),
        s in -3.0f64..3.0,
    ) {
        let basis = Arc::new(Basis::new(DomainSpec::interval(PI), 6).unwrap());
        let sys = GalerkinSystem::new(basis, p, Nonlinearity::zero()).unwrap();
        let mut fx = vec![0.0; 30];
        let mut fy = vec![0.0; 30];
        let mut fc = vec![0.0; 30];
        sys.rhs_flat(&x, &mut fx);
        sys.rhs_flat(&y, &mut fy);
        let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + s * b).collect();
        sys.rhs_flat(&comb, &mut fc);
        for i in 0..30 {
            let expect = fx[i] + s * fy[i];
            prop_assert!((fc[i] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn comparison_solution_is_increasing(y0 in 0.5f64..20.0, k in 0.2f64..4.0, frac in 0.05f64..0.9) {
        let f = Nonlinearity::quadratic(k).unwrap();
        let sol = comparison_solution(&f, 1.0, y0, 0.0).unwrap();
        let t = frac * sol.blowup_time;
        let a = comparison_solution(&f, 1.0, y0, t).unwrap().finite().unwrap();
        let b = comparison_solution(&f, 1.0, y0, 0.5 * (t + sol.blowup_time)).unwrap().finite().unwrap();
        prop_assert!(y0 < a && a < b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificates_validate(p in params(), t0 in 0.2f64..5.0, k in 0.3f64..3.0) {
        let basis = Basis::new(DomainSpec::interval(PI), 4).unwrap();
        let f = Nonlinearity::quadratic(k).unwrap();
        let cert = certify(&basis, &p, &f, t0, 0.01, 1.0).unwrap();
        prop_assert!(cert.checks.all(), "{:?}", cert.checks);
        prop_assert!(cert.k0 > 0.0 && cert.k1 > 0.0 && cert.k2 > 0.0);
        // Data are collinear with the principal mode.
        prop_assert!(cert.data.u0[1..].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn csv_header_is_stable() {
    // Changing this list requires bumping CSV_SCHEMA_VERSION.
    let expected = "t,u_inf,u_l2,grad_ut_l2,lap_u_l2,grad_utt_l2,lap_ut_l2,y,y_prime,F_N,F_N_gap,F2,F2_gap,\
                    r01,r02,r41,jensen_gap,odi_slack,regime_flag";
    assert_eq!(COLUMNS.join(","), expected);
    assert_eq!(jmgt::cli::output::CSV_SCHEMA_VERSION, 1);
    let empty = String::from_utf8(run_csv(&[]).unwrap()).unwrap();
    assert_eq!(empty, format!("{expected}\n"));
}
