//! Simulation under arbitrary open-loop control pairs, cost evaluation,
//! and the error/comparison metrics.
//!
//! The state equation in the transformed coordinates is
//! `z' = A(t)z + B_u(t)u + (0; I_s)v`, an inhomogeneous linear IVP. Costs
//! are evaluated with generalized control weights `(α, β)`:
//! `J_u = ½∫ zᵀD_u z + α uᵀu + β vᵀG_uv v` and
//! `J_v = ½∫ zᵀD_v z + β vᵀv + α uᵀG_vu u`; the cheap-follower game is
//! `(α, β) = (1, ε²)`.

use nalgebra::{DMatrix, DVector};

use crate::bvp::{solve, BvpOptions, LinearBvp, ShootingSolution};
use crate::error::{Error, Result};
use crate::exact::{assemble_bvp, layer_mesh, solve_linear_bvp, BvpSolution, SolveOptions, StackelbergBvp};
use crate::model::{GameSpec, TransformedGame};
use crate::ode::transition_affine;
use crate::quad::gauss_legendre;

/// An open-loop control pair on `[0, t_f]`.
pub struct ControlPair<'a> {
    pub label: &'static str,
    pub u: Box<dyn Fn(f64) -> DVector<f64> + 'a>,
    pub v: Box<dyn Fn(f64) -> DVector<f64> + 'a>,
}

/// Piecewise Chebyshev–Lobatto interpolant of a vector-valued function
/// over a mesh: `deg + 1` nodes per interval, barycentric evaluation.
///
/// Controls recovered from shooting solutions cost an adaptive ODE
/// propagation per query; tabulating them once keeps the outer adaptive
/// simulation from multiplying that cost. The functions are analytic on
/// each mesh interval and the meshes already resolve the boundary layers,
/// so a modest degree interpolates far below the tolerances in play.
pub struct MeshInterpolant {
    mesh: Vec<f64>,
    nodes: Vec<Vec<f64>>,
    values: Vec<Vec<DVector<f64>>>,
    bary: Vec<f64>,
}

impl MeshInterpolant {
    pub fn build(mesh: &[f64], deg: usize, f: &dyn Fn(f64) -> DVector<f64>) -> Self {
        // Chebyshev–Lobatto abscissae on [0, 1], ascending, with the
        // standard barycentric weights (±1 alternating, halved at the
        // ends).
        let ref_nodes: Vec<f64> = (0..=deg)
            .map(|j| 0.5 * (1.0 - (j as f64 * std::f64::consts::PI / deg as f64).cos()))
            .collect();
        let bary: Vec<f64> = (0..=deg)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg { 0.5 * s } else { s }
            })
            .collect();
        let mut nodes = Vec::with_capacity(mesh.len() - 1);
        let mut values = Vec::with_capacity(mesh.len() - 1);
        for w in mesh.windows(2) {
            let pts: Vec<f64> = ref_nodes.iter().map(|x| w[0] + (w[1] - w[0]) * x).collect();
            values.push(pts.iter().map(|&t| f(t)).collect());
            nodes.push(pts);
        }
        Self { mesh: mesh.to_vec(), nodes, values, bary }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let k = match self.mesh.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.mesh.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.mesh.len() - 2),
        };
        let (pts, vals) = (&self.nodes[k], &self.values[k]);
        let mut num = DVector::zeros(vals[0].len());
        let mut den = 0.0;
        for ((&x, v), &b) in pts.iter().zip(vals).zip(&self.bary) {
            let d = t - x;
            if d.abs() < 1e-14 * (1.0 + t.abs()) {
                return v.clone();
            }
            let c = b / d;
            num += v * c;
            den += c;
        }
        num / den
    }
}

/// Deterministic simulation mesh: uniform in the interior with
/// geometrically refined ε-scale zones at both ends.
pub fn sim_mesh(tg: &TransformedGame, eps: f64) -> Vec<f64> {
    let bvp = StackelbergBvp { tg: tg.clone(), eps: eps.max(1e-3) };
    layer_mesh(&bvp, None)
}

fn system_closures<'a>(
    tg: &'a TransformedGame,
    u: &'a dyn Fn(f64) -> DVector<f64>,
    v: &'a dyn Fn(f64) -> DVector<f64>,
) -> (impl Fn(f64) -> DMatrix<f64> + 'a, impl Fn(f64) -> DVector<f64> + 'a) {
    let m = tg.m();
    let matrix = move |t: f64| tg.a.eval(t);
    let forcing = move |t: f64| {
        let mut q = tg.b_u.eval(t) * u(t);
        let vv = v(t);
        for i in 0..tg.s {
            q[m + i] += vv[i];
        }
        q
    };
    (matrix, forcing)
}

/// Integrate the state equation under the given pair on the given mesh.
/// Node-to-node transitions are adaptive with local tolerance 1e−12.
pub fn simulate_openloop(
    tg: &TransformedGame,
    pair: &ControlPair,
    mesh: &[f64],
) -> ShootingSolution {
    let (matrix, forcing) = system_closures(tg, &pair.u, &pair.v);
    let n = tg.n;
    let mut values = Vec::with_capacity(mesh.len());
    let mut y = tg.z0.clone();
    values.push(y.clone());
    for w in mesh.windows(2) {
        let (phi, g) = transition_affine(&matrix, &forcing, n, w[0], w[1], 1e-12);
        y = phi * &y + g;
        values.push(y.clone());
    }
    ShootingSolution {
        mesh: mesh.to_vec(),
        values,
        max_defect: 0.0,
        max_boundary_residual: 0.0,
    }
}

/// Both cost functionals for a simulated pair, with control weights
/// `(α, β)`. Composite Gauss–Legendre of the given order per mesh
/// interval.
pub fn cost_of_pair(
    tg: &TransformedGame,
    alpha: f64,
    beta: f64,
    pair: &ControlPair,
    traj: &ShootingSolution,
    order: usize,
) -> (f64, f64) {
    let (matrix, forcing) = system_closures(tg, &pair.u, &pair.v);
    let (xs, ws) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in traj.mesh.windows(2) {
        let h = 0.5 * (w[1] - w[0]);
        let c = 0.5 * (w[0] + w[1]);
        for (x, wt) in xs.iter().zip(&ws) {
            nodes.push(c + h * x);
            weights.push(h * wt);
        }
    }
    let zs = traj.eval_many(&matrix, Some(&forcing), &nodes);
    let mut ju = 0.0;
    let mut jv = 0.0;
    for ((&t, &w), z) in nodes.iter().zip(&weights).zip(&zs) {
        let u = (pair.u)(t);
        let v = (pair.v)(t);
        let du = tg.d_u.eval(t);
        let dv1 = tg.d_v1.eval(t);
        let dv2 = tg.d_v2.eval(t);
        let guv = tg.g_uv.eval(t);
        let gvu = tg.g_vu.eval(t);
        let z1 = z.rows(0, tg.m());
        let z2 = z.rows(tg.m(), tg.s);
        let iu = (z.transpose() * &du * z)[(0, 0)]
            + alpha * u.dot(&u)
            + beta * (v.transpose() * &guv * &v)[(0, 0)];
        let iv = (z1.transpose() * &dv1 * z1)[(0, 0)]
            + (z2.transpose() * &dv2 * z2)[(0, 0)]
            + beta * v.dot(&v)
            + alpha * (u.transpose() * &gvu * &u)[(0, 0)];
        ju += w * iu;
        jv += w * iv;
    }
    (0.5 * ju, 0.5 * jv)
}

/// Refine a mesh by splitting every interval into `k` equal parts.
pub fn refine_mesh(mesh: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((mesh.len() - 1) * k + 1);
    for w in mesh.windows(2) {
        for j in 0..k {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
        }
    }
    out.push(*mesh.last().unwrap());
    out
}

/// Max-norm control differences over a mesh 4× finer than the given one.
pub fn control_errors(a: &ControlPair, b: &ControlPair, mesh: &[f64]) -> (f64, f64) {
    let fine = refine_mesh(mesh, 4);
    let mut du: f64 = 0.0;
    let mut dv: f64 = 0.0;
    for &t in &fine {
        du = du.max(((a.u)(t) - (b.u)(t)).amax());
        dv = dv.max(((a.v)(t) - (b.v)(t)).amax());
    }
    (du, dv)
}

/// Error metrics of one ε: max-norm control errors of the composed
/// first-order controls, and absolute/relative (percent) cost errors of
/// both the composed and the simplified pairs.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub eps: f64,
    pub j_u_star: f64,
    pub j_v_star: f64,
    /// `Δû`, `Δv̂`: max-norm control errors of the composed pair.
    pub delta_u_hat: f64,
    pub delta_v_hat: f64,
    /// Absolute cost errors of the composed pair `(û, v̂)`.
    pub dj_hat_u: f64,
    pub dj_hat_v: f64,
    /// Absolute cost errors of the simplified pair `(ũ, ṽ)`.
    pub dj_tilde_u: f64,
    pub dj_tilde_v: f64,
    /// Relative cost errors in percent.
    pub rel_hat_u: f64,
    pub rel_hat_v: f64,
    pub rel_tilde_u: f64,
    pub rel_tilde_v: f64,
}

/// Compute the full metrics row for one ε: exact solve, composed and
/// simplified pairs, control and cost errors.
pub fn metrics_for_eps(
    tg: &TransformedGame,
    exp: &crate::asymptotics::Expansion1,
    eps: f64,
    opts: &SolveOptions,
) -> Result<MetricsRow> {
    let bvp = assemble_bvp(tg, eps)?;
    let sol = solve_linear_bvp(&bvp, opts)?;
    let (j_u_star, j_v_star) = (sol.j_u, sol.j_v);

    let exact_pair = exact_pair(&bvp, &sol);
    let hat = hat_pair(exp, eps);
    let tilde = tilde_pair(exp, eps);

    let (delta_u_hat, delta_v_hat) = control_errors(&exact_pair, &hat, &sol.shooting.mesh);

    let mesh = sol.shooting.mesh.clone();
    let traj_hat = simulate_openloop(tg, &hat, &mesh);
    let (j_u_hat, j_v_hat) = cost_of_pair(tg, 1.0, eps * eps, &hat, &traj_hat, 8);
    let traj_tilde = simulate_openloop(tg, &tilde, &mesh);
    let (j_u_tilde, j_v_tilde) = cost_of_pair(tg, 1.0, eps * eps, &tilde, &traj_tilde, 8);

    let pct = |dj: f64, j: f64| dj / j * 100.0;
    Ok(MetricsRow {
        eps,
        j_u_star,
        j_v_star,
        delta_u_hat,
        delta_v_hat,
        dj_hat_u: (j_u_hat - j_u_star).abs(),
        dj_hat_v: (j_v_hat - j_v_star).abs(),
        dj_tilde_u: (j_u_tilde - j_u_star).abs(),
        dj_tilde_v: (j_v_tilde - j_v_star).abs(),
        rel_hat_u: pct((j_u_hat - j_u_star).abs(), j_u_star),
        rel_hat_v: pct((j_v_hat - j_v_star).abs(), j_v_star),
        rel_tilde_u: pct((j_u_tilde - j_u_star).abs(), j_u_star),
        rel_tilde_v: pct((j_v_tilde - j_v_star).abs(), j_v_star),
    })
}

/// Dense exact-control pair backed by a solved BVP.
pub fn exact_pair<'a>(bvp: &'a StackelbergBvp, sol: &'a BvpSolution) -> ControlPair<'a> {
    let tg = &bvp.tg;
    let eps = bvp.eps;
    let off = sol.layout.offsets();
    let (m, s) = (sol.layout.m, sol.layout.s);
    let u = move |t: f64| {
        let y = sol.eval_state(bvp, t);
        -tg.b_u1.eval(t).transpose() * y.rows(off[2], m)
            - tg.b_u2.eval(t).transpose() * y.rows(off[3], s) * eps
    };
    let v = move |t: f64| {
        let y = sol.eval_state(bvp, t);
        -y.rows(off[5], s).into_owned() / eps
    };
    ControlPair { label: "exact", u: Box::new(u), v: Box::new(v) }
}

/// Composed first-order pair `(û, v̂)`.
pub fn hat_pair<'a>(exp: &'a crate::asymptotics::Expansion1, eps: f64) -> ControlPair<'a> {
    let u = move |t: f64| exp.hat_controls(t, eps, 1).expect("composition in range").0;
    let v = move |t: f64| exp.hat_controls(t, eps, 1).expect("composition in range").1;
    ControlPair { label: "hat", u: Box::new(u), v: Box::new(v) }
}

/// Simplified pair `(ũ, ṽ)`.
pub fn tilde_pair<'a>(exp: &'a crate::asymptotics::Expansion1, eps: f64) -> ControlPair<'a> {
    let u = move |t: f64| exp.tilde_u(t);
    let v = move |t: f64| exp.tilde_v(t, eps);
    ControlPair { label: "tilde", u: Box::new(u), v: Box::new(v) }
}

/// The three control-weight regimes of the cheap-control comparison for
/// one ε, plus the derived improvement/deterioration percentages.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub eps: f64,
    /// `(J_u*, J_v*)` at weights `(1, 1)`.
    pub both_regular: (f64, f64),
    /// `(J_u*, J_v*)` at weights `(ε², 1)` — leader cheap.
    pub leader_cheap: (f64, f64),
    /// `(J_u*, J_v*)` at weights `(1, ε²)` — follower cheap.
    pub follower_cheap: (f64, f64),
    /// Own-cost improvement from using cheap control, percent:
    /// `(J_u*(1,1) − J_u*(ε²,1))/J_u*(1,1)·100` and the follower analogue.
    pub improvement_u: f64,
    pub improvement_v: f64,
    /// Cross-cost deterioration from the opponent's cheap control,
    /// percent: `(J_v*(ε²,1) − J_v*(1,1))/J_v*(1,1)·100` and the leader
    /// analogue.
    pub deterioration_v: f64,
    pub deterioration_u: f64,
}

/// Solve the three weight regimes per ε and derive the Eq.-style
/// improvement/deterioration percentages.
pub fn cheap_control_comparison(
    g: &GameSpec,
    tg: &TransformedGame,
    eps_grid: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<ComparisonRow>> {
    let solve_weights = |wu: f64, wv: f64| -> Result<(f64, f64)> {
        let mut gw = g.clone();
        gw.weight_u = wu;
        gw.weight_v = wv;
        let sol = crate::exact::general_weight_solve(&gw, tg, opts)?;
        Ok((sol.j_u, sol.j_v))
    };
    let both_regular = solve_weights(1.0, 1.0)?;
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let e2 = eps * eps;
        let leader_cheap = solve_weights(e2, 1.0)?;
        let follower_cheap = solve_weights(1.0, e2)?;
        let pct = |num: f64, den: f64| num / den * 100.0;
        out.push(ComparisonRow {
            eps,
            both_regular,
            leader_cheap,
            follower_cheap,
            improvement_u: pct(both_regular.0 - leader_cheap.0, both_regular.0),
            improvement_v: pct(both_regular.1 - follower_cheap.1, both_regular.1),
            deterioration_v: pct(leader_cheap.1 - both_regular.1, both_regular.1),
            deterioration_u: pct(follower_cheap.0 - both_regular.0, both_regular.0),
        });
    }
    Ok(out)
}

/// Follower argmin property: costs of `(u*, v* + δv_k)` for deterministic
/// smooth perturbation directions, returned as `J_v(perturbed) − J_v*`.
/// All gaps must be ≥ 0 (the exact follower control is a best response).
pub fn follower_perturbation_gaps(
    bvp: &StackelbergBvp,
    sol: &BvpSolution,
    n_dirs: usize,
    scale: f64,
) -> Vec<f64> {
    let tg = &bvp.tg;
    let eps = bvp.eps;
    let s = tg.s;
    let tf = tg.tf;
    let base = exact_pair(bvp, sol);
    let mesh = sol.shooting.mesh.clone();
    let u_tab = MeshInterpolant::build(&mesh, 8, &*base.u);
    let v_tab = MeshInterpolant::build(&mesh, 8, &*base.v);
    let mut gaps = Vec::with_capacity(n_dirs);
    for k in 0..n_dirs {
        let comp = k % s;
        let freq = (k / s + 1) as f64;
        let phase = 0.3 * k as f64;
        let dv = move |t: f64| {
            let mut d = DVector::zeros(s);
            d[comp] = scale * (freq * std::f64::consts::PI * t / tf + phase).sin();
            d
        };
        let (ut, vt) = (&u_tab, &v_tab);
        let pert = ControlPair {
            label: "perturbed",
            u: Box::new(move |t| ut.eval(t)),
            v: Box::new(move |t| vt.eval(t) + dv(t)),
        };
        let traj = simulate_openloop(tg, &pert, &mesh);
        let (_, jv) = cost_of_pair(tg, 1.0, eps * eps, &pert, &traj, 8);
        gaps.push(jv - sol.j_v);
    }
    gaps
}

/// Leader hierarchical-optimality property: deviate the leader control by
/// a smooth bump, re-solve the follower's LQ best response, and return
/// `J_u(u_dev, v⁰(u_dev)) − J_u*` for each deviation. All gaps must be
/// ≥ 0.
pub fn leader_deviation_gaps(
    bvp: &StackelbergBvp,
    sol: &BvpSolution,
    n_bumps: usize,
    scale: f64,
) -> Result<Vec<f64>> {
    let tg = &bvp.tg;
    let eps = bvp.eps;
    let (n, m, s, r, tf) = (tg.n, tg.m(), tg.s, tg.r, tg.tf);
    let base = exact_pair(bvp, sol);
    let mesh = sol.shooting.mesh.clone();
    let u_tab = MeshInterpolant::build(&mesh, 8, &*base.u);
    let width = tf / 10.0;
    let mut gaps = Vec::with_capacity(n_bumps);

    for k in 0..n_bumps {
        let center = tf * (k + 1) as f64 / (n_bumps + 1) as f64;
        let bump = move |t: f64| {
            let x = (t - center) / width;
            DVector::from_element(r, scale * (-x * x).exp())
        };
        let u_dev = |t: f64| u_tab.eval(t) + bump(t);

        // Follower best response to u_dev: the stationarity system in
        // scaled adjoint variables (z1, z2, p1, q2), q2 = p2/ε,
        // v⁰ = −q2/ε. Boundary data: z(0) = z0, p1(t_f) = q2(t_f) = 0.
        let dim = 2 * n;
        let matrix = |t: f64| {
            let a = tg.a.eval(t);
            let a1t = tg.a1.eval(t).transpose();
            let a2t = tg.a2.eval(t).transpose();
            let a3t = tg.a3.eval(t).transpose();
            let a4t = tg.a4.eval(t).transpose();
            let dv1 = tg.d_v1.eval(t);
            let dv2 = tg.d_v2.eval(t);
            let mut g = DMatrix::zeros(dim, dim);
            g.view_mut((0, 0), (n, n)).copy_from(&a);
            // z2' has −q2/ε from the optimal follower control.
            for i in 0..s {
                g[(m + i, n + m + i)] = -1.0 / eps;
            }
            // p1' = −D_v1 z1 − A1ᵀ p1 − ε A3ᵀ q2.
            g.view_mut((n, 0), (m, m)).copy_from(&(-&dv1));
            g.view_mut((n, n), (m, m)).copy_from(&(-&a1t));
            g.view_mut((n, n + m), (m, s)).copy_from(&(-&a3t * eps));
            // ε q2' = −D_v2 z2 − ε A2ᵀ p1 − ε² A4ᵀ q2.
            g.view_mut((n + m, m), (s, s)).copy_from(&(-&dv2 / eps));
            g.view_mut((n + m, n), (s, m)).copy_from(&(-&a2t));
            g.view_mut((n + m, n + m), (s, s)).copy_from(&(-&a4t * eps));
            g
        };
        let forcing = |t: f64| {
            let mut q = DVector::zeros(dim);
            q.rows_mut(0, n).copy_from(&(tg.b_u.eval(t) * u_dev(t)));
            q
        };
        let mut left_map = DMatrix::zeros(n, dim);
        left_map.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        let mut right_map = DMatrix::zeros(n, dim);
        right_map.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
        let lbvp = LinearBvp {
            dim,
            t0: 0.0,
            tf,
            matrix: &matrix,
            forcing: Some(&forcing),
            left_map,
            left_val: tg.z0.clone(),
            right_map,
            right_val: DVector::zeros(n),
        };
        let opts = BvpOptions { tol: 1e-9, boundary_tol: 1e-11, max_refine: 6 };
        let sh = solve(&lbvp, &mesh, &opts)
            .map_err(|e| Error::Unsolvable(format!("follower best response: {e}")))?;

        // v⁰(t) = −q2(t)/ε from the response solve; tabulated so the cost
        // simulation does not re-propagate the response system per query.
        let v0 = MeshInterpolant::build(&mesh, 8, &|t| {
            let y = sh.eval(&matrix, Some(&forcing), t);
            -y.rows(n + m, s).into_owned() / eps
        });
        let pair = ControlPair {
            label: "leader-deviation",
            u: Box::new(&u_dev as &dyn Fn(f64) -> DVector<f64>),
            v: Box::new(move |t| v0.eval(t)),
        };
        let traj = simulate_openloop(tg, &pair, &mesh);
        let (ju, _) = cost_of_pair(tg, 1.0, eps * eps, &pair, &traj, 8);
        gaps.push(ju - sol.j_u);
    }
    Ok(gaps)
}
