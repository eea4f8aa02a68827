//! Randomized invariant suite: algebraic identities of the numerical
//! kernels and structural invariants of the model transformation, checked
//! over generated inputs.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use stackelberg_cheap_control::evaluate::{control_errors, ControlPair};
use stackelberg_cheap_control::games::{supply_chain_with, SupplyChainParams};
use stackelberg_cheap_control::layer::LayerTerm;
use stackelberg_cheap_control::linalg::{expm, solve_lyapunov, solve_sylvester, sqrt_spd};
use stackelberg_cheap_control::model::{map_state_back, prepare};
use stackelberg_cheap_control::quad::integrate;

fn small_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n * n)
        .prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

/// Random SPD matrix `BᵀB + I/2`.
fn spd_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    small_matrix(n).prop_map(|b| b.transpose() * &b + DMatrix::identity(b.nrows(), b.nrows()) * 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly(
        coeffs in proptest::collection::vec(-2.0f64..2.0, 1..8),
        a in -1.0f64..0.0,
        b in 0.5f64..2.0,
    ) {
        // Order n is exact through degree 2n − 1; degree ≤ 7 needs n = 4.
        let poly = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64)
            .sum();
        let got = integrate(4, a, b, poly);
        prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn expm_inverse_identity(m in small_matrix(3)) {
        let prod = expm(&m) * expm(&(-&m));
        prop_assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn spd_square_root_squares_back(m in spd_matrix(3)) {
        let (root, inv_root) = sqrt_spd(&m).unwrap();
        prop_assert!((&root * &root - &m).amax() < 1e-10 * m.amax().max(1.0));
        prop_assert!((&root * &inv_root - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn sylvester_solution_satisfies_equation(
        s in spd_matrix(2),
        k in spd_matrix(2),
        c in small_matrix(2),
    ) {
        // SX − XK = C with K Hurwitz (negated SPD).
        let k = -k;
        let x = solve_sylvester(&s, &k, &c).unwrap();
        prop_assert!((&s * &x - &x * &k - &c).amax() < 1e-10);
    }

    #[test]
    fn lyapunov_solution_symmetric_and_consistent(s in spd_matrix(2), d0 in small_matrix(2)) {
        let d = &d0.transpose() * &d0; // PSD right-hand side
        let p = solve_lyapunov(&s, &d).unwrap();
        prop_assert!((&p - p.transpose()).amax() < 1e-12);
        prop_assert!((&s * &p + &p * &s - &d).amax() < 1e-10);
    }

    #[test]
    fn layer_term_identities(
        s in spd_matrix(2),
        c in small_matrix(2),
        w in proptest::collection::vec(-1.0f64..1.0, 2),
        xi in 0.0f64..8.0,
    ) {
        let w = DVector::from_column_slice(&w);
        let term = LayerTerm::decaying(c.clone(), &s, w.clone()).unwrap();
        // ξ-multiplication is pointwise multiplication by ξ.
        let xt = term.xi_mul();
        prop_assert!((xt.eval(xi) - term.eval(xi) * xi).amax() < 1e-11);
        // The total mass equals the plain tail integral at ξ = 0.
        let mass = term.total_integral().unwrap();
        let tail0 = term.tail_mass().unwrap().eval(0.0);
        prop_assert!((mass - tail0).amax() < 1e-11);
        // Spectral decay bound for the normal (symmetric-exponent) term:
        // ‖Ce^{−Sξ}w‖ ≤ ‖C‖₂ e^{−λmin ξ} ‖w‖.
        let lam_min = s.clone().symmetric_eigen().eigenvalues.min();
        let c_norm = c.svd(false, false).singular_values.max();
        let bound = c_norm * (-lam_min * xi).exp() * w.norm();
        prop_assert!(term.eval(xi).norm() <= bound * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn control_error_of_pair_with_itself_is_zero(
        cu in proptest::collection::vec(-2.0f64..2.0, 3),
        cv in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let u = |t: f64| DVector::from_element(1, cu[0] + cu[1] * t + cu[2] * t * t);
        let v = |t: f64| DVector::from_element(1, cv[0] + cv[1] * t + cv[2] * t * t);
        let a = ControlPair { label: "a", u: Box::new(u), v: Box::new(v) };
        let b = ControlPair { label: "b", u: Box::new(u), v: Box::new(v) };
        let mesh: Vec<f64> = (0..=10).map(|k| k as f64 / 5.0).collect();
        let (du, dv) = control_errors(&a, &b, &mesh);
        prop_assert_eq!(du, 0.0);
        prop_assert_eq!(dv, 0.0);
    }
}

proptest! {
    // The transformation pipeline is heavier; fewer cases suffice.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transformation_invariants_over_parameter_draws(
        a1 in 0.05f64..0.2,
        a2 in 0.1f64..0.4,
        b1 in 0.3f64..0.7,
        b2 in 0.2f64..0.6,
        c1 in 0.1f64..0.4,
        c2 in 0.4f64..0.8,
        k_m in 0.5f64..2.0,
        k_r in 2.0f64..8.0,
        z01 in -2.0f64..2.0,
        z02 in -2.0f64..2.0,
    ) {
        let params = SupplyChainParams { a1, a2, b1, b2, c1, c2, k_m, k_r, tf: 2.0 };
        let z0 = DVector::from_column_slice(&[z01, z02]);
        let g = supply_chain_with(params, z0.clone(), 1.0, 1.0);
        let tg = match prepare(&g, None) {
            Ok(tg) => tg,
            // A parameter draw may violate a standing assumption; the
            // invariants below only apply to admissible games.
            Err(_) => return Ok(()),
        };
        // The transformed initial state maps back to the original one.
        let back = map_state_back(&[(0.0, tg.z0.clone())], &tg.r_v);
        prop_assert!((&back[0].1 - &z0).amax() < 1e-10);
        // The fast control-cost block stays SPD along the horizon, and
        // the slow one stays symmetric PSD.
        for k in 0..=8 {
            let t = tg.tf * k as f64 / 8.0;
            let dv2 = tg.d_v2.eval(t);
            prop_assert!(sqrt_spd(&dv2).is_ok());
            let dv1 = tg.d_v1.eval(t);
            prop_assert!((&dv1 - dv1.transpose()).amax() < 1e-10);
            prop_assert!(dv1.clone().symmetric_eigen().eigenvalues.min() > -1e-10);
        }
    }
}
