//! Integration tests for the first-order asymptotic solution.

use approx::assert_relative_eq;
use nalgebra::DVector;
use stackelberg_cheap_control::asymptotics::{
    lyapunov_layer_integral, reduced_ocp_check, sqrt_spd, Expansion1,
};
use stackelberg_cheap_control::exact::{assemble_bvp, solve_linear_bvp, SolveOptions};
use stackelberg_cheap_control::games::{supply_chain, supply_chain_complement, SupplyChainParams};
use stackelberg_cheap_control::model::prepare;

fn transformed() -> stackelberg_cheap_control::model::TransformedGame {
    let g = supply_chain();
    let bc = supply_chain_complement(&SupplyChainParams::default());
    prepare(&g, Some(&bc)).unwrap()
}

#[test]
fn lyapunov_layer_integral_scalar_oracle() {
    let s = nalgebra::DMatrix::from_element(1, 1, 1.8f64.sqrt());
    let d = nalgebra::DMatrix::from_element(1, 1, 0.04);
    let p = lyapunov_layer_integral(&s, &d).unwrap();
    assert_relative_eq!(p[(0, 0)], 0.04 / (2.0 * 1.8f64.sqrt()), max_relative = 1e-13);
    assert_relative_eq!(p[(0, 0)], 0.014907, max_relative = 1e-4);
}

#[test]
fn outer_zero_closed_forms() {
    // D_v1 ≡ 0 makes λ̄v1,0 a homogeneous terminal-value problem: it
    // vanishes identically, and with it z̄2,0.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    for k in 0..=10 {
        let t = tg.tf * k as f64 / 10.0;
        let st = exp.asym.outer_state(&exp.outer0, t);
        assert!(st.lv1.amax() < 1e-11, "lv1({t}) = {}", st.lv1.amax());
        assert!(exp.asym.z2_of(t, &st).amax() < 1e-11);
    }
    // Endpoint conditions hold exactly.
    let st0 = exp.asym.outer_state(&exp.outer0, 0.0);
    let sttf = exp.asym.outer_state(&exp.outer0, tg.tf);
    assert!(st0.mu1.amax() < 1e-12);
    assert!(sttf.lu1.amax() < 1e-11);
    let (z01, _) = tg.z0_split();
    assert_relative_eq!(st0.z1, z01, epsilon = 1e-12);
}

#[test]
fn left_layer_zero_closed_form() {
    // z̄2,0 ≡ 0 ⇒ Δ = z0,2; z2,0⁰(ξ) = e^{−√1.8 ξ}·Δ.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let (_, z02) = tg.z0_split();
    assert_relative_eq!(exp.left.delta, z02, epsilon = 1e-11);
    let kappa = 1.8f64.sqrt();
    for xi in [0.0, 0.5, 2.0, 8.0] {
        assert_relative_eq!(
            exp.left.z20.eval(xi)[0],
            (-kappa * xi).exp() * exp.left.delta[0],
            max_relative = 1e-12
        );
        assert_relative_eq!(
            exp.left.lv20.eval(xi)[0],
            kappa * (-kappa * xi).exp() * exp.left.delta[0],
            max_relative = 1e-12
        );
    }
    assert_relative_eq!(
        exp.left.p_lyap[(0, 0)],
        0.04 / (2.0 * kappa),
        max_relative = 1e-12
    );
}

#[test]
fn left_layer_first_slow_oracle() {
    // z1,1⁰(0) = −A2(0)·Δ/√1.8 with A2(0) = 0.05.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let a2_0 = tg.a2.eval(0.0)[(0, 0)];
    assert_relative_eq!(a2_0, 0.05, max_relative = 1e-12);
    assert_relative_eq!(
        exp.left.z11.eval(0.0)[0],
        -a2_0 * exp.left.delta[0] / 1.8f64.sqrt(),
        max_relative = 1e-12
    );
    // λv1,1⁰ ≡ 0.
    for xi in [0.0, 1.0, 4.0] {
        assert!(exp.left.lv11.eval(xi).amax() == 0.0);
    }
}

#[test]
fn layer_decay_bounds() {
    // All layer corrections decay at least like e^{−κξ/2} on ξ ∈ [0, 30].
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let kappa = 1.8f64.sqrt();
    let terms = [
        &exp.left.z20,
        &exp.left.lv20,
        &exp.left.lu20,
        &exp.left.mu20,
        &exp.left.z11,
        &exp.left.lu11,
        &exp.left.mu11,
        &exp.left.z21,
        &exp.left.lv21,
        &exp.left.lu21,
        &exp.left.mu21,
    ];
    for term in terms {
        let a = term.eval(0.0).amax().max(term.eval(0.5).amax()).max(1e-12) * 10.0;
        for k in 1..=30 {
            let xi = k as f64;
            assert!(
                term.eval(xi).amax() <= a * (-0.5 * kappa * xi).exp() + 1e-13,
                "decay violated at xi={xi}"
            );
        }
    }
}

#[test]
fn x1_satisfies_its_differential_equation() {
    // x1⁰ solves dx/dξ = S x + f_x with x → 0; equivalently the residual of
    // dx/dξ − Sx − f_x vanishes. Checked by central differences.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    // Reconstruct x1⁰ and f_x from the assembled blocks:
    // z21⁰ = x1 + ½S⁻¹y1, λv21⁰ = −Sx1 + ½y1 ⇒ x1 = ½(z21⁰ − S⁻¹λv21⁰).
    let s = exp.left.s[(0, 0)];
    let x1 = |xi: f64| 0.5 * (exp.left.z21.eval(xi)[0] - exp.left.lv21.eval(xi)[0] / s);
    // f_x from its definition (§6 pieces: Ḋ_v2 = Ḋ_u3 = 0, A4 constant).
    let a4 = tg.a4.eval(0.0)[(0, 0)];
    let f_x = |xi: f64| 0.5 * (a4 * exp.left.z20.eval(xi)[0] + a4 / s * exp.left.lv20.eval(xi)[0]);
    let h = 1e-5;
    for k in 1..=50 {
        let xi = 0.1 + 8.0 * k as f64 / 50.0;
        let dx = (x1(xi + h) - x1(xi - h)) / (2.0 * h);
        let res = dx - s * x1(xi) - f_x(xi);
        assert!(res.abs() < 1e-9, "residual {res:.3e} at xi={xi}");
    }
}

#[test]
fn right_layer_terminal_matching() {
    // λu2,1ᶠ(0) = −λ̄u2,1(t_f) and λv2,1ᶠ(0) = −λ̄v2,1(t_f).
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let st_tf = exp.asym.outer_state(&exp.outer0, tg.tf);
    let lv21_tf = exp.asym.lv21_of(tg.tf, &st_tf);
    let lu21_tf = exp.asym.lu21_of(tg.tf, &st_tf);
    assert_relative_eq!(exp.right.lv21.eval(0.0), -&lv21_tf, epsilon = 1e-11);
    assert_relative_eq!(exp.right.lu21.eval(0.0), -&lu21_tf, epsilon = 1e-11);
    // Right-layer decay on ψ ∈ [0, 30].
    let a = exp.right.z21.eval(0.0).amax().max(1e-12) * 10.0;
    for k in 1..=30 {
        let psi = k as f64;
        assert!(exp.right.z21.eval(psi).amax() <= a * (-0.5 * 1.8f64.sqrt() * psi).exp() + 1e-13);
    }
}

#[test]
fn composition_restores_initial_fast_state() {
    // At t = 0 only the right-layer residue survives in z2¹ − z0,2:
    // exponentially small in t_f/ε.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let (_, z02) = tg.z0_split();
    for eps in [0.2, 0.1, 0.05] {
        let y = exp.eval_scaled(0.0, eps, 1).unwrap();
        let z2 = y.rows(1, 1).into_owned();
        let residue = eps * 10.0 * (-1.8f64.sqrt() * tg.tf / eps).exp() + 1e-10;
        assert!((z2[0] - z02[0]).abs() <= residue, "eps={eps}: {}", (z2[0] - z02[0]).abs());
    }
}

#[test]
fn lambda_v1_has_no_layer_content() {
    // λv1¹ = λ̄v1,0 + ελ̄v1,1 exactly — check the layer blocks are zero so
    // the composed λv1 at the endpoints equals the outer values.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let eps = 0.1;
    for t in [0.0, 0.37, tg.tf] {
        let y = exp.eval_scaled(t, eps, 1).unwrap();
        let st0 = exp.asym.outer_state(&exp.outer0, t);
        let st1 = exp.asym.outer_state(&exp.outer1, t);
        let expected = &st0.lv1 + &st1.lv1 * eps;
        assert_relative_eq!(y.rows(4, 1).into_owned(), expected, epsilon = 1e-11);
    }
}

#[test]
fn reduced_ocp_matches_outer_solution() {
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let check = reduced_ocp_check(&exp.asym, &exp.outer0).unwrap();
    assert!(
        (check.j_u_star - check.j_u_zero).abs() <= 1e-8,
        "cost gap {}",
        (check.j_u_star - check.j_u_zero).abs()
    );
    assert!(check.max_control_gap <= 1e-8, "control gap {}", check.max_control_gap);
    // ũ equals the reduced optimal control (both are −B_u1ᵀλ̄u1,0).
    let (ju0, _) = exp.eps_free_costs();
    assert!((check.j_u_zero - ju0).abs() <= 1e-9);
}

#[test]
fn tilde_u_is_eps_free_and_matches_outer() {
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    for t in [0.0, 0.8, 1.9] {
        let u = exp.tilde_u(t);
        let st0 = exp.asym.outer_state(&exp.outer0, t);
        let expected = -tg.b_u1.eval(t).transpose() * st0.lu1;
        assert_relative_eq!(u, expected, epsilon = 1e-14);
    }
}

#[test]
fn hat_controls_error_halves_with_eps() {
    // Against the exact solver: max-norm control errors at ε = 0.1 are at
    // least 3× smaller than at ε = 0.2 (second-order accuracy of the
    // first-order expansion).
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let opts = SolveOptions::default();
    let mut errs_u = Vec::new();
    let mut errs_v = Vec::new();
    for eps in [0.2, 0.1] {
        let bvp = assemble_bvp(&tg, eps).unwrap();
        let sol = solve_linear_bvp(&bvp, &opts).unwrap();
        let mut eu: f64 = 0.0;
        let mut ev: f64 = 0.0;
        for ((&t, u_ex), v_ex) in
            sol.shooting.mesh.iter().zip(&sol.u_star).zip(&sol.v_star)
        {
            let (u_hat, v_hat) = exp.hat_controls(t, eps, 1).unwrap();
            eu = eu.max((u_ex - u_hat).amax());
            ev = ev.max((v_ex - v_hat).amax());
        }
        errs_u.push(eu);
        errs_v.push(ev);
    }
    assert!(
        errs_u[0] / errs_u[1] >= 3.0,
        "u error ratio {} (errors {:?})",
        errs_u[0] / errs_u[1],
        errs_u
    );
    assert!(errs_v[0] > errs_v[1], "v errors {:?}", errs_v);
}

#[test]
fn eps_free_costs_converge_at_first_order() {
    // |J*(ε) − J̄_0| halves (±30%) when ε halves from 0.1 to 0.05.
    let tg = transformed();
    let exp = Expansion1::build(&tg).unwrap();
    let (ju0, jv0) = exp.eps_free_costs();
    let opts = SolveOptions::default();
    let gaps: Vec<(f64, f64)> = [0.1, 0.05]
        .iter()
        .map(|&eps| {
            let sol = solve_linear_bvp(&assemble_bvp(&tg, eps).unwrap(), &opts).unwrap();
            ((sol.j_u - ju0).abs(), (sol.j_v - jv0).abs())
        })
        .collect();
    let ru = gaps[0].0 / gaps[1].0;
    let rv = gaps[0].1 / gaps[1].1;
    assert!((1.4..=2.6).contains(&ru), "J_u gap ratio {ru} (gaps {gaps:?})");
    assert!((1.4..=2.6).contains(&rv), "J_v gap ratio {rv} (gaps {gaps:?})");
}

#[test]
fn sqrt_spd_reexported_and_correct() {
    let m = nalgebra::DMatrix::from_element(1, 1, 1.8);
    let (r, ri) = sqrt_spd(&m).unwrap();
    assert_relative_eq!(r[(0, 0)], 1.341641, max_relative = 1e-6);
    assert_relative_eq!(ri[(0, 0)], 1.0 / 1.8f64.sqrt(), max_relative = 1e-13);
}

#[test]
fn zero_initial_state_gives_zero_expansion() {
    let params = SupplyChainParams::default();
    let g = stackelberg_cheap_control::games::supply_chain_with(
        params,
        DVector::from_column_slice(&[0.0, 0.0]),
        1.0,
        1.0,
    );
    let bc = supply_chain_complement(&SupplyChainParams::default());
    let tg = prepare(&g, Some(&bc)).unwrap();
    let exp = Expansion1::build(&tg).unwrap();
    let y = exp.eval_scaled(1.0, 0.1, 1).unwrap();
    assert!(y.amax() < 1e-11, "nonzero expansion from zero state: {}", y.amax());
    let (ju0, jv0) = exp.eps_free_costs();
    assert!(ju0.abs() < 1e-12 && jv0.abs() < 1e-12);
}
