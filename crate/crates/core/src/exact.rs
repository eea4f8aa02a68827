//! Exact solution of the cheap-follower Stackelberg game for a given ε.
//!
//! The open-loop Stackelberg solution is characterized by a linear
//! two-point boundary-value problem in `(z, λ_u, λ_v, μ)` of dimension
//! `4n`. In the scaled block variables (the fast costate blocks carry a
//! factor ε) it reads
//!
//! ```text
//!  z1' = A1 z1 + A2 z2 − S_u1 λu1 − ε S_u2 λu2
//! εz2' = ε(A3 z1 + A4 z2 − S_u2ᵀ λu1) − ε² S_u3 λu2 − λv2
//! λu1' = −D_u1 z1 − D_u2 z2 − A1ᵀ λu1 − ε A3ᵀ λu2 + D_v1 μ1
//! ελu2' = −D_u2ᵀ z1 − D_u3 z2 − A2ᵀ λu1 − ε A4ᵀ λu2 + D_v2 μ2
//! λv1' = −D_v1 z1 − A1ᵀ λv1 − ε A3ᵀ λv2
//! ελv2' = −D_v2 z2 − A2ᵀ λv1 − ε A4ᵀ λv2
//!  μ1' = A1 μ1 + A2 μ2
//! εμ2' = λu2 − ε⁴ G_uv λv2 + ε A3 μ1 + ε A4 μ2
//! ```
//!
//! with `z(0) = z₀`, `μ(0) = 0`, `λ_u(t_f) = λ_v(t_f) = 0`. The fast
//! modes have rates `±κ/ε` with `κ` the eigenvalues of `D_v2^{1/2}`, so
//! boundary layers of width `O(ε ln(1/ε))` form at both endpoints; the
//! shooting mesh resolves them with node spacing proportional to ε.

use nalgebra::{Complex, DMatrix, DVector};

use crate::bvp::{self, BvpOptions, LinearBvp, ShootingSolution};
use crate::linalg::max_abs_re_eig;
use crate::model::{GameSpec, TransformedGame};
use crate::quad::gauss_legendre;
use crate::{Error, Result};

/// Default smallest ε the solver accepts.
pub const EPS_MIN_DEFAULT: f64 = 1e-3;

/// The scaled singularly perturbed BVP for one ε.
pub struct StackelbergBvp {
    /// Transformed game the problem was assembled from.
    pub tg: TransformedGame,
    /// Cheap-control parameter (> 0).
    pub eps: f64,
}

/// Component offsets into the `4n` scaled state vector, in the fixed
/// layout `(z1, z2, λu1, λu2, λv1, λv2, μ1, μ2)`.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    /// Slow block size `n − s`.
    pub m: usize,
    /// Fast block size `s`.
    pub s: usize,
}

impl Layout {
    /// Offsets of the eight components.
    pub fn offsets(&self) -> [usize; 8] {
        let (m, s) = (self.m, self.s);
        let n = m + s;
        [0, m, n, n + m, 2 * n, 2 * n + m, 3 * n, 3 * n + m]
    }

    /// Sizes of the eight components.
    pub fn sizes(&self) -> [usize; 8] {
        [self.m, self.s, self.m, self.s, self.m, self.s, self.m, self.s]
    }

    /// Total dimension `4n`.
    pub fn dim(&self) -> usize {
        4 * (self.m + self.s)
    }
}

impl StackelbergBvp {
    /// Block layout of the scaled state vector.
    pub fn layout(&self) -> Layout {
        Layout { m: self.tg.m(), s: self.tg.s }
    }

    /// Coefficient matrix of the *unscaled-time* system `y' = M(t) y`
    /// (the fast rows carry their `1/ε` factors explicitly).
    pub fn system_matrix(&self, t: f64) -> DMatrix<f64> {
        let tg = &self.tg;
        let eps = self.eps;
        let lay = self.layout();
        let (m, s) = (lay.m, lay.s);
        let off = lay.offsets();
        let [o_z1, o_z2, o_lu1, o_lu2, o_lv1, o_lv2, o_m1, o_m2] = off;

        let a1 = tg.a1.eval(t);
        let a2 = tg.a2.eval(t);
        let a3 = tg.a3.eval(t);
        let a4 = tg.a4.eval(t);
        let du1 = tg.d_u1.eval(t);
        let du2 = tg.d_u2.eval(t);
        let du3 = tg.d_u3.eval(t);
        let su1 = tg.s_u1.eval(t);
        let su2 = tg.s_u2.eval(t);
        let su3 = tg.s_u3.eval(t);
        let dv1 = tg.d_v1.eval(t);
        let dv2 = tg.d_v2.eval(t);
        let guv = tg.g_uv.eval(t);

        let mut mt = DMatrix::zeros(lay.dim(), lay.dim());
        let mut put = |r: usize, c: usize, b: &DMatrix<f64>| {
            mt.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        };

        // z1 row.
        put(o_z1, o_z1, &a1);
        put(o_z1, o_z2, &a2);
        put(o_z1, o_lu1, &(-&su1));
        put(o_z1, o_lu2, &(-&su2 * eps));
        // z2 row (÷ε applied).
        put(o_z2, o_z1, &a3);
        put(o_z2, o_z2, &a4);
        put(o_z2, o_lu1, &(-su2.transpose()));
        put(o_z2, o_lu2, &(-&su3 * eps));
        put(o_z2, o_lv2, &(-DMatrix::identity(s, s) / eps));
        // λu1 row.
        put(o_lu1, o_z1, &(-&du1));
        put(o_lu1, o_z2, &(-&du2));
        put(o_lu1, o_lu1, &(-a1.transpose()));
        put(o_lu1, o_lu2, &(-a3.transpose() * eps));
        put(o_lu1, o_m1, &dv1);
        // λu2 row (÷ε applied).
        put(o_lu2, o_z1, &(-du2.transpose() / eps));
        put(o_lu2, o_z2, &(-&du3 / eps));
        put(o_lu2, o_lu1, &(-a2.transpose() / eps));
        put(o_lu2, o_lu2, &(-a4.transpose()));
        put(o_lu2, o_m2, &(&dv2 / eps));
        // λv1 row.
        put(o_lv1, o_z1, &(-&dv1));
        put(o_lv1, o_lv1, &(-a1.transpose()));
        put(o_lv1, o_lv2, &(-a3.transpose() * eps));
        // λv2 row (÷ε applied).
        put(o_lv2, o_z2, &(-&dv2 / eps));
        put(o_lv2, o_lv1, &(-a2.transpose() / eps));
        put(o_lv2, o_lv2, &(-a4.transpose()));
        // μ1 row.
        put(o_m1, o_m1, &a1);
        put(o_m1, o_m2, &a2);
        // μ2 row (÷ε applied).
        put(o_m2, o_lu2, &(DMatrix::identity(s, s) / eps));
        put(o_m2, o_lv2, &(-&guv * eps.powi(3)));
        put(o_m2, o_m1, &a3);
        put(o_m2, o_m2, &a4);
        let _ = m;
        mt
    }

    /// Left boundary map: `z(0) = z₀`, `μ(0) = 0` (2n rows).
    pub fn left_boundary(&self) -> (DMatrix<f64>, DVector<f64>) {
        let lay = self.layout();
        let n = lay.m + lay.s;
        let dim = lay.dim();
        let mut map = DMatrix::zeros(2 * n, dim);
        let mut val = DVector::zeros(2 * n);
        for i in 0..n {
            map[(i, i)] = 1.0; // z block
            map[(n + i, 3 * n + i)] = 1.0; // μ block
            val[i] = self.tg.z0[i];
        }
        (map, val)
    }

    /// Right boundary map: `λ_u(t_f) = λ_v(t_f) = 0` (2n rows).
    pub fn right_boundary(&self) -> (DMatrix<f64>, DVector<f64>) {
        let lay = self.layout();
        let n = lay.m + lay.s;
        let dim = lay.dim();
        let mut map = DMatrix::zeros(2 * n, dim);
        for i in 0..2 * n {
            map[(i, n + i)] = 1.0; // λu then λv blocks
        }
        (map, DVector::zeros(2 * n))
    }
}

/// Assemble the scaled BVP for the given ε.
pub fn assemble_bvp(tg: &TransformedGame, eps: f64) -> Result<StackelbergBvp> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    Ok(StackelbergBvp { tg: tg.clone(), eps })
}

/// Solver options for [`solve_linear_bvp`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// ODE defect tolerance.
    pub tol: f64,
    /// Boundary residual tolerance.
    pub boundary_tol: f64,
    /// Optional minimum number of interior intervals.
    pub mesh_hint: Option<usize>,
    /// Refusal threshold for ε (documented override of the 1e−3 default).
    pub eps_min: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, boundary_tol: 1e-12, mesh_hint: None, eps_min: EPS_MIN_DEFAULT }
    }
}

/// A solved Stackelberg BVP: node states of the eight scaled components,
/// controls, costs, and residual diagnostics.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    /// ε the problem was solved at.
    pub eps: f64,
    /// Block layout.
    pub layout: Layout,
    /// Shooting mesh and node states (scaled variables).
    pub shooting: ShootingSolution,
    /// Leader control at the mesh nodes.
    pub u_star: Vec<DVector<f64>>,
    /// Follower control at the mesh nodes.
    pub v_star: Vec<DVector<f64>>,
    /// Optimal leader cost.
    pub j_u: f64,
    /// Optimal follower cost.
    pub j_v: f64,
    /// Max residual of the printed scaled equations at mesh midpoints
    /// (finite-difference check against the dense solution).
    pub max_ode_residual: f64,
    /// Max independent re-integration defect (relative to state scale).
    pub max_defect: f64,
    /// Max boundary-condition residual.
    pub max_boundary_residual: f64,
}

impl BvpSolution {
    /// Number of mesh nodes.
    pub fn mesh_size(&self) -> usize {
        self.shooting.mesh.len()
    }

    /// Dense state evaluation (scaled variables).
    pub fn eval_state(&self, bvp: &StackelbergBvp, t: f64) -> DVector<f64> {
        let m = |t: f64| bvp.system_matrix(t);
        self.shooting.eval(&m, None, t)
    }

    /// Dense state evaluation on an ascending time list.
    pub fn eval_states(&self, bvp: &StackelbergBvp, ts: &[f64]) -> Vec<DVector<f64>> {
        let m = |t: f64| bvp.system_matrix(t);
        self.shooting.eval_many(&m, None, ts)
    }

    /// Extract one of the eight components from a full state vector.
    pub fn component<'a>(&self, y: &'a DVector<f64>, idx: usize) -> nalgebra::DVectorView<'a, f64> {
        let off = self.layout.offsets()[idx];
        let sz = self.layout.sizes()[idx];
        y.rows(off, sz)
    }

    /// Trajectory of `z = (z1, z2)` at the mesh nodes, for mapping back
    /// to original coordinates.
    pub fn z_trajectory(&self) -> Vec<(f64, DVector<f64>)> {
        let n = self.layout.m + self.layout.s;
        self.shooting
            .mesh
            .iter()
            .zip(&self.shooting.values)
            .map(|(&t, y)| (t, y.rows(0, n).into_owned()))
            .collect()
    }
}

/// Build the three-zone, layer-resolving shooting mesh.
///
/// Layer width is `κ·ε·ln(1/ε)` scaled by the slowest fast decay rate;
/// layer spacing is proportional to ε; interior spacing keeps
/// (stiffness rate) × (step) bounded so shooting blocks stay
/// well-conditioned.
pub fn layer_mesh(bvp: &StackelbergBvp, mesh_hint: Option<usize>) -> Vec<f64> {
    let tf = bvp.tg.tf;
    let eps = bvp.eps;

    // Stiffness rate from the actual system matrix on a coarse sample.
    let mut rate: f64 = 0.0;
    for k in 0..=8 {
        let t = tf * k as f64 / 8.0;
        rate = rate.max(max_abs_re_eig(&bvp.system_matrix(t)));
    }
    rate = rate.max(1.0 / tf);

    let min_intervals = mesh_hint.unwrap_or(16).max(4);
    let h_int = (tf / min_intervals as f64).min(8.0 / rate);

    // Layer zone: width where e^{−rate·t} has not yet decayed below
    // round-off, capped to a third of the horizon.
    let lay_width = (eps * (1.0 / eps).ln().max(1.0) * 8.0 / (rate * eps).max(1.0)).min(tf / 3.0);
    let h_lay = (eps / 2.0).min(h_int).max(lay_width / 64.0);

    let mut mesh = vec![0.0];
    let push = |mesh: &mut Vec<f64>, t: f64| {
        if t > *mesh.last().unwrap() + 1e-14 * tf.max(1.0) {
            mesh.push(t);
        }
    };
    if lay_width > h_lay && lay_width < tf / 2.0 {
        // Left layer.
        let k = (lay_width / h_lay).ceil() as usize;
        for i in 1..=k {
            push(&mut mesh, lay_width * i as f64 / k as f64);
        }
        // Interior.
        let interior = tf - 2.0 * lay_width;
        let k = (interior / h_int).ceil().max(1.0) as usize;
        for i in 1..=k {
            push(&mut mesh, lay_width + interior * i as f64 / k as f64);
        }
        // Right layer.
        let k = (lay_width / h_lay).ceil() as usize;
        for i in 1..=k {
            push(&mut mesh, tf - lay_width + lay_width * i as f64 / k as f64);
        }
    } else {
        let k = (tf / h_int.min(h_lay)).ceil().max(1.0) as usize;
        for i in 1..=k {
            push(&mut mesh, tf * i as f64 / k as f64);
        }
    }
    let last = *mesh.last().unwrap();
    if (last - tf).abs() > 1e-14 * tf.max(1.0) {
        mesh.push(tf);
    } else {
        *mesh.last_mut().unwrap() = tf;
    }
    mesh
}

/// Solve the scaled BVP on a layer-resolving mesh.
pub fn solve_linear_bvp(bvp: &StackelbergBvp, opts: &SolveOptions) -> Result<BvpSolution> {
    if bvp.eps < opts.eps_min {
        return Err(Error::Parameter(format!(
            "epsilon = {} is below eps_min = {} (override eps_min to force)",
            bvp.eps, opts.eps_min
        )));
    }
    let mesh = layer_mesh(bvp, opts.mesh_hint);
    let m = |t: f64| bvp.system_matrix(t);
    let (left_map, left_val) = bvp.left_boundary();
    let (right_map, right_val) = bvp.right_boundary();
    let lin = LinearBvp {
        dim: bvp.layout().dim(),
        t0: 0.0,
        tf: bvp.tg.tf,
        matrix: &m,
        forcing: None,
        left_map,
        left_val,
        right_map,
        right_val,
    };
    let shooting = bvp::solve(
        &lin,
        &mesh,
        &BvpOptions { tol: opts.tol, boundary_tol: opts.boundary_tol, max_refine: 6 },
    )?;

    let mut sol = BvpSolution {
        eps: bvp.eps,
        layout: bvp.layout(),
        u_star: Vec::new(),
        v_star: Vec::new(),
        j_u: 0.0,
        j_v: 0.0,
        max_ode_residual: 0.0,
        max_defect: shooting.max_defect,
        max_boundary_residual: shooting.max_boundary_residual,
        shooting,
    };
    let (u, v) = extract_optimal_controls(&sol, &bvp.tg);
    sol.u_star = u;
    sol.v_star = v;
    let (j_u, j_v) = optimal_costs(&sol, bvp)?;
    sol.j_u = j_u;
    sol.j_v = j_v;
    sol.max_ode_residual = scaled_residual(&sol, bvp);
    Ok(sol)
}

/// Max residual of the printed scaled equations at the mesh midpoints,
/// using a five-point finite difference of the dense solution as an
/// independent derivative estimate. Fast rows are weighted by ε as in
/// the printed system.
pub fn scaled_residual(sol: &BvpSolution, bvp: &StackelbergBvp) -> f64 {
    let eps = bvp.eps;
    let lay = sol.layout;
    let delta = (1e-3 * eps).clamp(1e-7, 1e-4);

    // Collect the stencil points for every interior midpoint.
    let mids: Vec<f64> = sol
        .shooting
        .mesh
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|&t| t - 2.0 * delta > 0.0 && t + 2.0 * delta < bvp.tg.tf)
        .collect();
    let mut pts = Vec::with_capacity(5 * mids.len());
    for &t in &mids {
        for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            pts.push(t + k * delta);
        }
    }
    let states = sol.eval_states(bvp, &pts);
    let scale = 1.0 + states.iter().map(|y| y.amax()).fold(0.0, f64::max);

    // Row weights of the printed equations: ε on the fast rows.
    let mut w = DVector::from_element(lay.dim(), 1.0);
    let off = lay.offsets();
    for (idx, &o) in off.iter().enumerate() {
        if idx % 2 == 1 {
            for i in 0..lay.sizes()[idx] {
                w[o + i] = eps;
            }
        }
    }

    let mut worst = 0.0f64;
    for (i, &t) in mids.iter().enumerate() {
        let y = &states[5 * i + 2];
        let dy = (&states[5 * i] - &states[5 * i + 1] * 8.0 + &states[5 * i + 3] * 8.0
            - &states[5 * i + 4])
            / (12.0 * delta);
        let resid = (dy - bvp.system_matrix(t) * y).component_mul(&w);
        worst = worst.max(resid.amax() / scale);
    }
    worst
}

/// Optimal controls at the mesh nodes: `u* = −B_u1ᵀλu1 − εB_u2ᵀλu2`,
/// `v* = −(1/ε)λv2` (scaled variables).
pub fn extract_optimal_controls(sol: &BvpSolution, tg: &TransformedGame) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let eps = sol.eps;
    let mut us = Vec::with_capacity(sol.mesh_size());
    let mut vs = Vec::with_capacity(sol.mesh_size());
    for (&t, y) in sol.shooting.mesh.iter().zip(&sol.shooting.values) {
        let lu1 = sol.component(y, 2);
        let lu2 = sol.component(y, 3);
        let lv2 = sol.component(y, 5);
        let u = -tg.b_u1.eval(t).transpose() * lu1 - tg.b_u2.eval(t).transpose() * lu2 * eps;
        let v = -DVector::from_column_slice(lv2.as_slice()) / eps;
        us.push(u);
        vs.push(v);
    }
    (us, vs)
}

/// Cost integrand values `(j_u, j_v)` at time `t` for a scaled state `y`.
fn cost_integrands(bvp: &StackelbergBvp, t: f64, y: &DVector<f64>) -> (f64, f64) {
    let tg = &bvp.tg;
    let eps = bvp.eps;
    let lay = Layout { m: tg.m(), s: tg.s };
    let off = lay.offsets();
    let n = tg.n;
    let z = y.rows(0, n);
    let lu1 = y.rows(off[2], lay.m);
    let lu2 = y.rows(off[3], lay.s);
    let lv2 = y.rows(off[5], lay.s);

    let u = -tg.b_u1.eval(t).transpose() * lu1 - tg.b_u2.eval(t).transpose() * lu2 * eps;
    // ε² vᵀ (·) v with v = −λv2/ε reduces to λv2ᵀ (·) λv2.
    let du = tg.d_u.eval(t);
    let dv1 = tg.d_v1.eval(t);
    let dv2 = tg.d_v2.eval(t);
    let z1 = y.rows(0, lay.m);
    let z2 = y.rows(lay.m, lay.s);

    let ju = (z.transpose() * du * z)[(0, 0)]
        + u.norm_squared()
        + (lv2.transpose() * tg.g_uv.eval(t) * lv2)[(0, 0)];
    let jv = (z1.transpose() * dv1 * z1)[(0, 0)]
        + (z2.transpose() * dv2 * z2)[(0, 0)]
        + (u.transpose() * tg.g_vu.eval(t) * u)[(0, 0)]
        + lv2.norm_squared();
    (ju, jv)
}

/// Optimal costs by composite Gauss–Legendre quadrature on the solver
/// mesh, cross-checked against the costate (expanded) form of the leader
/// cost.
pub fn optimal_costs(sol: &BvpSolution, bvp: &StackelbergBvp) -> Result<(f64, f64)> {
    let order = 8;
    let (xs, ws) = gauss_legendre(order);

    // All quadrature points, ascending, then one dense sweep.
    let mut pts = Vec::new();
    for w in sol.shooting.mesh.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let half = 0.5 * (w[1] - w[0]);
        for &x in &xs {
            pts.push(mid + half * x);
        }
    }
    let states = sol.eval_states(bvp, &pts);

    let (mut j_u, mut j_v, mut j_u_costate) = (0.0, 0.0, 0.0);
    let tg = &bvp.tg;
    let eps = bvp.eps;
    let lay = sol.layout;
    let off = lay.offsets();
    for (k, w) in sol.shooting.mesh.windows(2).enumerate() {
        let half = 0.5 * (w[1] - w[0]);
        for (i, &gw) in ws.iter().enumerate() {
            let t = pts[k * order + i];
            let y = &states[k * order + i];
            let (fu, fv) = cost_integrands(bvp, t, y);
            j_u += gw * half * 0.5 * fu;
            j_v += gw * half * 0.5 * fv;

            // Costate form of the leader integrand:
            // zᵀD_u z + λu1ᵀS_u1λu1 + 2ε λu1ᵀS_u2λu2 + ε² λu2ᵀS_u3λu2
            //   + λv2ᵀ G_uv λv2.
            let z = y.rows(0, tg.n);
            let lu1 = y.rows(off[2], lay.m);
            let lu2 = y.rows(off[3], lay.s);
            let lv2 = y.rows(off[5], lay.s);
            let f = (z.transpose() * tg.d_u.eval(t) * z)[(0, 0)]
                + (lu1.transpose() * tg.s_u1.eval(t) * lu1)[(0, 0)]
                + 2.0 * eps * (lu1.transpose() * tg.s_u2.eval(t) * lu2)[(0, 0)]
                + eps * eps * (lu2.transpose() * tg.s_u3.eval(t) * lu2)[(0, 0)]
                + (lv2.transpose() * tg.g_uv.eval(t) * lv2)[(0, 0)];
            j_u_costate += gw * half * 0.5 * f;
        }
    }

    let scale = 1.0 + j_u.abs();
    if (j_u - j_u_costate).abs() > 1e-8 * scale {
        return Err(Error::Inconsistency(format!(
            "leader cost: direct quadrature {j_u:e} vs costate form {j_u_costate:e}"
        )));
    }
    Ok((j_u, j_v))
}

/// Eigenvalue dichotomy report for the fast-mode matrix Φ(t, ε).
#[derive(Debug, Clone)]
pub struct FastSpectrumReport {
    /// Per sampled time: `(t, eigenvalues, count Re ≥ α*, count Re ≤ −α*)`.
    pub samples: Vec<(f64, Vec<Complex<f64>>)>,
    /// Largest α for which the 2s/2s split holds at every sampled time
    /// (the minimum |Re| over the spectrum), or 0 when the split fails.
    pub alpha_star: f64,
    /// Whether every sampled time splits into 2s stable / 2s-unstable.
    pub split_ok: bool,
}

/// Fast-mode matrix
/// `Φ(t,ε) = [[εA4, −ε²S_u3, −I, 0], [−D_u3, −εA4ᵀ, 0, D_v2],
///            [−D_v2, 0, −εA4ᵀ, 0], [0, I, −ε⁴G_uv, εA4]]`
/// acting on `(z2, λu2, λv2, μ2)`.
pub fn fast_matrix(tg: &TransformedGame, eps: f64, t: f64) -> DMatrix<f64> {
    let s = tg.s;
    let a4 = tg.a4.eval(t);
    let su3 = tg.s_u3.eval(t);
    let du3 = tg.d_u3.eval(t);
    let dv2 = tg.d_v2.eval(t);
    let guv = tg.g_uv.eval(t);
    let i = DMatrix::<f64>::identity(s, s);

    let mut phi = DMatrix::zeros(4 * s, 4 * s);
    let mut put = |r: usize, c: usize, b: DMatrix<f64>| {
        phi.view_mut((r * s, c * s), (s, s)).copy_from(&b);
    };
    put(0, 0, &a4 * eps);
    put(0, 1, -&su3 * eps * eps);
    put(0, 2, -&i);
    put(1, 0, -&du3);
    put(1, 1, -a4.transpose() * eps);
    put(1, 3, dv2.clone());
    put(2, 0, -&dv2);
    put(2, 2, -a4.transpose() * eps);
    put(3, 1, i.clone());
    put(3, 2, -&guv * eps.powi(4));
    put(3, 3, &a4 * eps);
    phi
}

/// Eigenvalues of Φ(t, ε) at sampled times and the largest α for which
/// exactly 2s eigenvalues satisfy Re ≥ α and 2s satisfy Re ≤ −α.
pub fn fast_spectrum(tg: &TransformedGame, eps: f64, t_samples: &[f64]) -> Result<FastSpectrumReport> {
    if eps < 0.0 {
        return Err(Error::Parameter("epsilon must be non-negative".into()));
    }
    let s = tg.s;
    let mut samples = Vec::with_capacity(t_samples.len());
    let mut alpha = f64::INFINITY;
    let mut split_ok = true;
    for &t in t_samples {
        let phi = fast_matrix(tg, eps, t);
        let eig: Vec<Complex<f64>> = phi.complex_eigenvalues().iter().cloned().collect();
        let pos = eig.iter().filter(|z| z.re > 0.0).count();
        let neg = eig.iter().filter(|z| z.re < 0.0).count();
        if pos != 2 * s || neg != 2 * s {
            split_ok = false;
        }
        for z in &eig {
            alpha = alpha.min(z.re.abs());
        }
        samples.push((t, eig));
    }
    Ok(FastSpectrumReport { samples, alpha_star: if split_ok { alpha } else { 0.0 }, split_ok })
}

/// Eigenvalues of Φ(t, 0) computed from its structure.
///
/// At ε = 0 the characteristic polynomial of Φ factors as
/// det(D_v2(t) − κ²I)², so the spectrum is ±κ_k(t) with κ_k the
/// eigenvalues of D_v2^{1/2}(t), each doubled. The doubled eigenvalues are
/// defective (one eigenvector per pair), which limits a generic
/// nonsymmetric eigensolver to O(√ulp) accuracy; the symmetric
/// eigendecomposition of D_v2 recovers them to machine precision.
/// Returned sorted ascending, length 4s.
pub fn limit_spectrum(tg: &TransformedGame, t: f64) -> Result<Vec<f64>> {
    let dv2 = tg.d_v2.eval(t);
    let sym = (dv2.transpose() + &dv2) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut out = Vec::with_capacity(4 * tg.s);
    for lam in eig.eigenvalues.iter() {
        if *lam <= 0.0 {
            return Err(Error::Assumption {
                name: "A4",
                t,
                detail: format!("D_v2 eigenvalue {lam} not positive"),
            });
        }
        let kappa = lam.sqrt();
        out.extend_from_slice(&[kappa, kappa, -kappa, -kappa]);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Rescale a transformed game to absorb a generalized leader weight α:
/// `B_u ← B_u/√α` (hence `S_u ← S_u/α`) and `G_vu ← G_vu/α`. With α = 1
/// this is an exact no-op (multiplication by 1.0).
fn scaled_for_leader_weight(tg: &TransformedGame, alpha: f64) -> TransformedGame {
    let inv_sqrt = 1.0 / alpha.sqrt();
    let inv = 1.0 / alpha;
    let mut out = tg.clone();
    out.b_u = tg.b_u.scale(inv_sqrt);
    out.b_u1 = tg.b_u1.scale(inv_sqrt);
    out.b_u2 = tg.b_u2.scale(inv_sqrt);
    out.s_u1 = tg.s_u1.scale(inv);
    out.s_u2 = tg.s_u2.scale(inv);
    out.s_u3 = tg.s_u3.scale(inv);
    out.g_vu = tg.g_vu.scale(inv);
    out
}

/// Exact open-loop Stackelberg solve for generalized control weights
/// `(α, β) = (weight_u, weight_v)` of the game spec.
///
/// The necessary-condition BVP with `S_u = (1/α)B_uB_uᵀ`,
/// `S_v = (1/β)B_vB_vᵀ` is reduced to the cheap-follower path by the
/// substitutions `u ← √α·u`, `ε = √β`; the returned controls are mapped
/// back (`u* ← u*/√α`). Restricted to `G_uv ≡ 0`, where the generalized
/// μ-equation carries no cross term. With `(α, β) = (1, ε²)` this routine
/// runs the identical code path as the dedicated solver.
pub fn general_weight_solve(
    g: &GameSpec,
    tg: &TransformedGame,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    if !tg.g_uv.is_zero(0.0) {
        return Err(Error::Unsupported(
            "general_weight_solve requires G_uv ≡ 0 (cross term in the μ-equation unsupported)".into(),
        ));
    }
    let alpha = g.weight_u;
    let beta = g.weight_v;
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::Parameter("weights must be positive".into()));
    }
    let tg_mod = scaled_for_leader_weight(tg, alpha);
    let eps = beta.sqrt();
    let bvp = assemble_bvp(&tg_mod, eps)?;
    let mut sol = solve_linear_bvp(&bvp, opts)?;
    // Map the substituted control back to the original leader control.
    let inv_sqrt = 1.0 / alpha.sqrt();
    for u in &mut sol.u_star {
        *u *= inv_sqrt;
    }
    Ok(sol)
}
