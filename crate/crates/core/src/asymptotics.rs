//! First-order asymptotic solution of the cheap-follower Stackelberg
//! boundary-value problem.
//!
//! The solution is composed of ε-free *outer* terms (a 4(n−s)-dimensional
//! linear BVP plus algebraic recoveries of the fast components), left
//! boundary-layer corrections in the stretched variable ξ = t/ε, and right
//! boundary-layer corrections in ψ = (t_f − t)/ε. Layer corrections are
//! kept in closed form (sums of `C·e^{Kξ}·w`, see [`crate::layer`]), so
//! the composed approximation can be evaluated exactly at any time.

use nalgebra::{DMatrix, DVector};

use crate::bvp::{solve, uniform_mesh, BvpOptions, LinearBvp, ShootingSolution};
use crate::error::{Error, Result};
use crate::exact::Layout;
use crate::layer::LayerTerm;
use crate::linalg::solve_sylvester;
pub use crate::linalg::{solve_lyapunov, sqrt_spd};
use crate::matfn::MatrixFunction;
use crate::model::TransformedGame;
use crate::quad::gauss_legendre;

/// `P = ∫₀^∞ e^{−Sσ} D e^{−Sσ} dσ` for SPD `S`, i.e. the solution of the
/// Lyapunov identity `SP + PS = D`.
pub fn lyapunov_layer_integral(s: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sqrt_spd(s)?; // PD check
    solve_lyapunov(s, d)
}

/// Precomputed coefficient functions of the outer problem.
///
/// The fast outer components are algebraic in the slow ones:
/// `z̄2 = MZ·λ̄v1` and `μ̄2 = P1·z̄1 + P2·λ̄v1 + P3·λ̄u1`; the slow
/// quadruple `(z̄1, λ̄u1, λ̄v1, μ̄1)` satisfies a linear ODE whose blocks
/// are stored here. All coefficients are exact rational matrix functions,
/// so their time derivatives (needed by the order-1 algebraic terms) are
/// exact as well.
#[derive(Debug, Clone)]
pub struct Asymptotics {
    pub tg: TransformedGame,
    /// `z̄2 = mz·λ̄v1`, i.e. `mz = −D_v2⁻¹A2ᵀ`.
    mz: MatrixFunction,
    dmz: MatrixFunction,
    /// `μ̄2 = p1·z̄1 + p2·λ̄v1 + p3·λ̄u1`:
    /// `p1 = D_v2⁻¹D_u2ᵀ`, `p2 = −D_v2⁻¹D_u3D_v2⁻¹A2ᵀ`, `p3 = D_v2⁻¹A2ᵀ`.
    p1: MatrixFunction,
    p2: MatrixFunction,
    p3: MatrixFunction,
    dp1: MatrixFunction,
    dp2: MatrixFunction,
    dp3: MatrixFunction,
    /// `−A2D_v2⁻¹A2ᵀ` (z̄1-equation, λ̄v1 coefficient).
    f12: MatrixFunction,
    /// `D_u2D_v2⁻¹A2ᵀ` (λ̄u1-equation, λ̄v1 coefficient).
    q12: MatrixFunction,
    /// μ̄1-equation coefficients: `A2D_v2⁻¹D_u2ᵀ`, `A2D_v2⁻¹A2ᵀ`,
    /// `−A2D_v2⁻¹D_u3D_v2⁻¹A2ᵀ`.
    mu_z: MatrixFunction,
    mu_lu: MatrixFunction,
    mu_lv: MatrixFunction,
}

/// Slow outer quadruple at one time.
#[derive(Debug, Clone)]
pub struct OuterState {
    pub z1: DVector<f64>,
    pub lu1: DVector<f64>,
    pub lv1: DVector<f64>,
    pub mu1: DVector<f64>,
}

impl OuterState {
    fn split(y: &DVector<f64>, m: usize) -> Self {
        Self {
            z1: y.rows(0, m).into_owned(),
            lu1: y.rows(m, m).into_owned(),
            lv1: y.rows(2 * m, m).into_owned(),
            mu1: y.rows(3 * m, m).into_owned(),
        }
    }
}

/// A solved outer BVP (order 0 or order 1 — same ODE, different boundary
/// data).
#[derive(Debug, Clone)]
pub struct OuterSolution {
    pub shooting: ShootingSolution,
    pub m: usize,
}

impl Asymptotics {
    pub fn new(tg: &TransformedGame) -> Self {
        let dv2_inv = tg.d_v2.inverse();
        let a2t = tg.a2.transpose();
        let mz = dv2_inv.mul(&a2t).neg();
        let p1 = dv2_inv.mul(&tg.d_u2.transpose());
        let p2 = dv2_inv.mul(&tg.d_u3).mul(&dv2_inv).mul(&a2t).neg();
        let p3 = dv2_inv.mul(&a2t);
        let f12 = tg.a2.mul(&dv2_inv).mul(&a2t).neg();
        let q12 = tg.d_u2.mul(&dv2_inv).mul(&a2t);
        let mu_z = tg.a2.mul(&dv2_inv).mul(&tg.d_u2.transpose());
        let mu_lu = tg.a2.mul(&dv2_inv).mul(&a2t);
        let mu_lv = tg.a2.mul(&dv2_inv).mul(&tg.d_u3).mul(&dv2_inv).mul(&a2t).neg();
        Self {
            tg: tg.clone(),
            dmz: mz.deriv(),
            dp1: p1.deriv(),
            dp2: p2.deriv(),
            dp3: p3.deriv(),
            mz,
            p1,
            p2,
            p3,
            f12,
            q12,
            mu_z,
            mu_lu,
            mu_lv,
        }
    }

    pub fn m(&self) -> usize {
        self.tg.m()
    }

    /// Coefficient matrix of the 4(n−s)-dimensional slow outer ODE, state
    /// ordering `(z̄1, λ̄u1, λ̄v1, μ̄1)`.
    pub fn outer_matrix(&self, t: f64) -> DMatrix<f64> {
        let m = self.m();
        let a1 = self.tg.a1.eval(t);
        let a1t = a1.transpose();
        let su1 = self.tg.s_u1.eval(t);
        let du1 = self.tg.d_u1.eval(t);
        let dv1 = self.tg.d_v1.eval(t);
        let f12 = self.f12.eval(t);
        let q12 = self.q12.eval(t);
        let mut g = DMatrix::zeros(4 * m, 4 * m);
        let mut put = |r: usize, c: usize, b: &DMatrix<f64>| {
            g.view_mut((r * m, c * m), (m, m)).copy_from(b);
        };
        put(0, 0, &a1);
        put(0, 1, &(-&su1));
        put(0, 2, &f12);
        put(1, 0, &(-&du1));
        put(1, 1, &(-&a1t));
        put(1, 2, &q12);
        put(1, 3, &dv1);
        put(2, 0, &(-&dv1));
        put(2, 2, &(-&a1t));
        put(3, 0, &self.mu_z.eval(t));
        put(3, 1, &self.mu_lu.eval(t));
        put(3, 2, &self.mu_lv.eval(t));
        put(3, 3, &a1);
        g
    }

    /// Solve the outer BVP with boundary data `z̄1(0) = z_left`,
    /// `μ̄1(0) = mu_left`, `λ̄u1(t_f) = λ̄v1(t_f) = 0`.
    pub fn solve_outer(&self, z_left: &DVector<f64>, mu_left: &DVector<f64>) -> Result<OuterSolution> {
        let m = self.m();
        let dim = 4 * m;
        let mut left_map = DMatrix::zeros(2 * m, dim);
        left_map.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
        left_map.view_mut((m, 3 * m), (m, m)).copy_from(&DMatrix::identity(m, m));
        let mut left_val = DVector::zeros(2 * m);
        left_val.rows_mut(0, m).copy_from(z_left);
        left_val.rows_mut(m, m).copy_from(mu_left);
        let mut right_map = DMatrix::zeros(2 * m, dim);
        right_map.view_mut((0, m), (m, m)).copy_from(&DMatrix::identity(m, m));
        right_map.view_mut((m, 2 * m), (m, m)).copy_from(&DMatrix::identity(m, m));
        let right_val = DVector::zeros(2 * m);

        let matrix = |t: f64| self.outer_matrix(t);
        let bvp = LinearBvp {
            dim,
            t0: 0.0,
            tf: self.tg.tf,
            matrix: &matrix,
            forcing: None,
            left_map,
            left_val,
            right_map,
            right_val,
        };
        let opts = BvpOptions { tol: 1e-11, boundary_tol: 1e-12, max_refine: 8 };
        let shooting = solve(&bvp, &uniform_mesh(0.0, self.tg.tf, 16), &opts)
            .map_err(|e| Error::Unsolvable(format!("outer boundary-value problem: {e}")))?;
        Ok(OuterSolution { shooting, m })
    }

    /// Dense outer evaluation.
    pub fn outer_state(&self, sol: &OuterSolution, t: f64) -> OuterState {
        let matrix = |t: f64| self.outer_matrix(t);
        OuterState::split(&sol.shooting.eval(&matrix, None, t), sol.m)
    }

    /// Dense outer evaluation along an ascending time list.
    pub fn outer_states(&self, sol: &OuterSolution, ts: &[f64]) -> Vec<OuterState> {
        let matrix = |t: f64| self.outer_matrix(t);
        sol.shooting
            .eval_many(&matrix, None, ts)
            .iter()
            .map(|y| OuterState::split(y, sol.m))
            .collect()
    }

    /// Algebraic fast state `z̄2(t)`.
    pub fn z2_of(&self, t: f64, st: &OuterState) -> DVector<f64> {
        self.mz.eval(t) * &st.lv1
    }

    /// Algebraic fast shift `μ̄2(t)`.
    pub fn mu2_of(&self, t: f64, st: &OuterState) -> DVector<f64> {
        self.p1.eval(t) * &st.z1 + self.p2.eval(t) * &st.lv1 + self.p3.eval(t) * &st.lu1
    }

    fn z1_dot(&self, t: f64, st: &OuterState) -> DVector<f64> {
        self.tg.a1.eval(t) * &st.z1 - self.tg.s_u1.eval(t) * &st.lu1 + self.f12.eval(t) * &st.lv1
    }

    fn lu1_dot(&self, t: f64, st: &OuterState) -> DVector<f64> {
        -self.tg.d_u1.eval(t) * &st.z1 - self.tg.a1.eval(t).transpose() * &st.lu1
            + self.q12.eval(t) * &st.lv1
            + self.tg.d_v1.eval(t) * &st.mu1
    }

    fn lv1_dot(&self, t: f64, st: &OuterState) -> DVector<f64> {
        -self.tg.d_v1.eval(t) * &st.z1 - self.tg.a1.eval(t).transpose() * &st.lv1
    }

    /// Exact `dz̄2/dt` via the product rule and the outer ODE.
    pub fn dz2_of(&self, t: f64, st: &OuterState) -> DVector<f64> {
        self.dmz.eval(t) * &st.lv1 + self.mz.eval(t) * self.lv1_dot(t, st)
    }

    /// Exact `dμ̄2/dt` via the product rule and the outer ODE.
    pub fn dmu2_of(&self, t: f64, st: &OuterState) -> DVector<f64> {
        self.dp1.eval(t) * &st.z1
            + self.p1.eval(t) * self.z1_dot(t, st)
            + self.dp2.eval(t) * &st.lv1
            + self.p2.eval(t) * self.lv1_dot(t, st)
            + self.dp3.eval(t) * &st.lu1
            + self.p3.eval(t) * self.lu1_dot(t, st)
    }

    /// Order-1 algebraic `λ̄v2,1(t)` from the order-0 outer state.
    pub fn lv21_of(&self, t: f64, st0: &OuterState) -> DVector<f64> {
        self.tg.a3.eval(t) * &st0.z1 + self.tg.a4.eval(t) * self.z2_of(t, st0)
            - self.tg.s_u2.eval(t).transpose() * &st0.lu1
            - self.dz2_of(t, st0)
    }

    /// Order-1 algebraic `λ̄u2,1(t)` from the order-0 outer state.
    pub fn lu21_of(&self, t: f64, st0: &OuterState) -> DVector<f64> {
        self.dmu2_of(t, st0) - self.tg.a3.eval(t) * &st0.mu1
            - self.tg.a4.eval(t) * self.mu2_of(t, st0)
    }
}

/// Left boundary-layer corrections (stretched variable ξ = t/ε ≥ 0).
#[derive(Debug, Clone)]
pub struct LeftLayers {
    /// `S = D_v2^{1/2}(0)` and its inverse.
    pub s: DMatrix<f64>,
    pub s_inv: DMatrix<f64>,
    /// Initial fast mismatch `Δ = z0,2 − z̄2,0(0)`.
    pub delta: DVector<f64>,
    /// `P = ∫₀^∞ e^{−Sσ} D_u3(0) e^{−Sσ} dσ`.
    pub p_lyap: DMatrix<f64>,
    // order ε⁰, fast components
    pub z20: LayerTerm,
    pub lv20: LayerTerm,
    pub lu20: LayerTerm,
    pub mu20: LayerTerm,
    // order ε¹, slow components
    pub z11: LayerTerm,
    pub lu11: LayerTerm,
    pub lv11: LayerTerm,
    pub mu11: LayerTerm,
    // order ε¹, fast components
    pub z21: LayerTerm,
    pub lv21: LayerTerm,
    pub lu21: LayerTerm,
    pub mu21: LayerTerm,
}

/// Right boundary-layer corrections (stretched variable ψ = (t_f − t)/ε ≥ 0).
/// All order-ε⁰ right corrections vanish; only the four fast order-ε¹
/// corrections are nonzero.
#[derive(Debug, Clone)]
pub struct RightLayers {
    /// `S_f = D_v2^{1/2}(t_f)`.
    pub s_f: DMatrix<f64>,
    pub z21: LayerTerm,
    pub lv21: LayerTerm,
    pub lu21: LayerTerm,
    pub mu21: LayerTerm,
}

/// The full first-order asymptotic solution.
#[derive(Debug, Clone)]
pub struct Expansion1 {
    pub asym: Asymptotics,
    pub outer0: OuterSolution,
    pub outer1: OuterSolution,
    pub left: LeftLayers,
    pub right: RightLayers,
}

fn scaled_sum(terms: &[(f64, LayerTerm)]) -> Result<LayerTerm> {
    let scaled: Vec<LayerTerm> = terms.iter().map(|(a, t)| t.scale(*a)).collect();
    LayerTerm::sum(&scaled)
}

impl Expansion1 {
    /// Build the complete expansion for a transformed game.
    pub fn build(tg: &TransformedGame) -> Result<Self> {
        let asym = Asymptotics::new(tg);
        let m = asym.m();
        let s_dim = tg.s;
        let (z01, z02) = tg.z0_split();

        // Order-0 outer.
        let outer0 = asym.solve_outer(&z01, &DVector::zeros(m))?;
        let st0_at0 = asym.outer_state(&outer0, 0.0);
        let z20_bar0 = asym.z2_of(0.0, &st0_at0);
        let mu20_bar0 = asym.mu2_of(0.0, &st0_at0);

        // Order-0 left layer.
        let (s, s_inv) = sqrt_spd(&tg.d_v2.eval(0.0))?;
        let delta = &z02 - &z20_bar0;
        let du3_0 = tg.d_u3.eval(0.0);
        let p_lyap = lyapunov_layer_integral(&s, &du3_0)?;
        let eye_s = DMatrix::<f64>::identity(s_dim, s_dim);

        let z20 = LayerTerm::decaying(eye_s.clone(), &s, delta.clone())?;
        let lv20 = LayerTerm::decaying(s.clone(), &s, delta.clone())?;
        let zeta0 = LayerTerm::decaying(p_lyap.clone(), &s, delta.clone())?;
        let eta0_at0 = -&mu20_bar0 - &s_inv * &p_lyap * &delta * 0.5;
        let eta0 = LayerTerm::decaying(eye_s.clone(), &s, eta0_at0)?.add(
            &LayerTerm::decaying(&s_inv * &du3_0 * 0.5, &s, delta.clone())?.conv_forward(&s)?,
        )?;
        let lu20 = eta0.lmul(&(-&s))?.add(&zeta0.scale(0.5))?;
        let mu20 = eta0.add(&zeta0.lmul(&(&s_inv * 0.5))?)?;

        // Order-1 left layer, slow components.
        let a2_0 = tg.a2.eval(0.0);
        let du2_0 = tg.d_u2.eval(0.0);
        let z11 = LayerTerm::decaying(-&a2_0 * &s_inv, &s, delta.clone())?;
        let lu11 = LayerTerm::decaying(&du2_0 * &s_inv, &s, delta.clone())?;
        let lv11 = LayerTerm::decaying(DMatrix::zeros(m, s_dim), &s, delta.clone())?;
        let mu11 = mu20.tail_mass()?.lmul(&(-&a2_0))?;

        // Order-1 outer: boundary data cancels the slow layer at t = 0.
        let z11_left = &a2_0 * &s_inv * &delta;
        let mu11_left = &a2_0 * mu20.total_integral()?;
        let outer1 = asym.solve_outer(&z11_left, &mu11_left)?;
        let st1_at0 = asym.outer_state(&outer1, 0.0);
        let z21_bar0 = asym.z2_of(0.0, &st1_at0);
        let mu21_bar0 = asym.mu2_of(0.0, &st1_at0);

        // Order-1 left layer, fast components: forcing terms.
        let a4_0 = tg.a4.eval(0.0);
        let a4t_0 = a4_0.transpose();
        let dv2_dot0 = tg.d_v2.deriv().eval(0.0);
        let du3_dot0 = tg.d_u3.deriv().eval(0.0);
        let xi_z20 = z20.xi_mul();
        let xi_mu20 = mu20.xi_mul();

        let f_x = scaled_sum(&[
            (0.5, z20.lmul(&a4_0)?),
            (0.5, xi_z20.lmul(&(&s_inv * &dv2_dot0))?),
            (0.5, lv20.lmul(&(&s_inv * &a4t_0))?),
        ])?;
        let f_y = scaled_sum(&[
            (1.0, z20.lmul(&(&s * &a4_0))?),
            (-1.0, xi_z20.lmul(&dv2_dot0)?),
            (-1.0, lv20.lmul(&a4t_0)?),
        ])?;
        let f_eta = scaled_sum(&[
            (0.5, mu20.lmul(&a4_0)?),
            (0.5, z11.lmul(&(&s_inv * du2_0.transpose()))?),
            (0.5, xi_z20.lmul(&(&s_inv * &du3_dot0))?),
            (0.5, lu11.lmul(&(&s_inv * a2_0.transpose()))?),
            (0.5, lu20.lmul(&(&s_inv * &a4t_0))?),
            (-0.5, xi_mu20.lmul(&(&s_inv * &dv2_dot0))?),
        ])?;
        let f_zeta = scaled_sum(&[
            (1.0, mu20.lmul(&(&s * &a4_0))?),
            (-1.0, z11.lmul(&du2_0.transpose())?),
            (-1.0, xi_z20.lmul(&du3_dot0)?),
            (-1.0, lu11.lmul(&a2_0.transpose())?),
            (-1.0, lu20.lmul(&a4t_0)?),
            (1.0, xi_mu20.lmul(&dv2_dot0)?),
        ])?;

        // Stable/unstable split: decaying modes integrate forward, growing
        // modes backward from infinity.
        let x1 = f_x.tail_integral(&s)?.scale(-1.0);
        let y1_at0 = &s * (-&z21_bar0 - x1.eval(0.0)) * 2.0;
        let y1 = LayerTerm::decaying(eye_s.clone(), &s, y1_at0)?.add(&f_y.conv_forward(&s)?)?;

        let g_eta = scaled_sum(&[
            (1.0, x1.lmul(&(&s_inv * &du3_0 * 0.5))?),
            (1.0, y1.lmul(&(&s_inv * &du3_0 * &s_inv * 0.25))?),
            (1.0, f_eta),
        ])?;
        let g_zeta = scaled_sum(&[
            (-1.0, x1.lmul(&du3_0)?),
            (-0.5, y1.lmul(&(&du3_0 * &s_inv))?),
            (1.0, f_zeta),
        ])?;
        let g_zeta_tail = g_zeta.tail_integral(&s)?;
        let eta1_at0 = -&mu21_bar0 + &s_inv * g_zeta_tail.eval(0.0) * 0.5;
        let eta1 = LayerTerm::decaying(eye_s, &s, eta1_at0)?.add(&g_eta.conv_forward(&s)?)?;
        let zeta1 = g_zeta_tail.scale(-1.0);

        let z21 = x1.add(&y1.lmul(&(&s_inv * 0.5))?)?;
        let lv21 = x1.lmul(&(-&s))?.add(&y1.scale(0.5))?;
        let lu21 = eta1.lmul(&(-&s))?.add(&zeta1.scale(0.5))?;
        let mu21 = eta1.add(&zeta1.lmul(&(&s_inv * 0.5))?)?;

        let left = LeftLayers {
            s,
            s_inv,
            delta,
            p_lyap,
            z20,
            lv20,
            lu20,
            mu20,
            z11,
            lu11,
            lv11,
            mu11,
            z21,
            lv21,
            lu21,
            mu21,
        };

        // Right layer (order ε¹ only).
        let tf = tg.tf;
        let st0_tf = asym.outer_state(&outer0, tf);
        let lv21_bar_tf = asym.lv21_of(tf, &st0_tf);
        let lu21_bar_tf = asym.lu21_of(tf, &st0_tf);
        let (s_f, s_f_inv) = sqrt_spd(&tg.d_v2.eval(tf))?;
        let du3_f = tg.d_u3.eval(tf);
        let eye_f = DMatrix::<f64>::identity(s_dim, s_dim);

        let zf = LayerTerm::decaying(s_f_inv.clone(), &s_f, lv21_bar_tf.clone())?;
        let lvf = LayerTerm::decaying(-&eye_f, &s_f, lv21_bar_tf.clone())?;
        let m_mat = &s_f_inv * &du3_f * &s_f_inv;
        let etaf = LayerTerm::decaying(m_mat * 0.5, &s_f, lv21_bar_tf.clone())?
            .tail_integral(&s_f)?;
        let n_mat = &du3_f * &s_f_inv;
        let p_n = solve_sylvester(&s_f, &(-&s_f), &n_mat)?;
        let zetaf_at0 = -&lu21_bar_tf * 2.0 + &p_n * &lv21_bar_tf;
        let zetaf = LayerTerm::decaying(eye_f, &s_f, zetaf_at0)?.add(
            &LayerTerm::decaying(n_mat, &s_f, lv21_bar_tf)?.conv_forward(&s_f)?,
        )?;
        let luf = etaf.lmul(&(-&s_f))?.add(&zetaf.scale(0.5))?;
        let muf = etaf.add(&zetaf.lmul(&(&s_f_inv * 0.5))?)?;

        let right = RightLayers { s_f, z21: zf, lv21: lvf, lu21: luf, mu21: muf };

        Ok(Self { asym, outer0, outer1, left, right })
    }

    pub fn tg(&self) -> &TransformedGame {
        &self.asym.tg
    }

    fn layout(&self) -> Layout {
        Layout { m: self.asym.m(), s: self.tg().s }
    }

    /// Evaluate the composed approximation of the scaled state at time `t`
    /// for parameter `eps`, to the requested order (0 or 1). Blocks follow
    /// the exact solver's layout `(z1, z2, λu1, λu2, λv1, λv2, μ1, μ2)`,
    /// with λu2/λv2 in their scaled form.
    pub fn eval_scaled(&self, t: f64, eps: f64, order: u8) -> Result<DVector<f64>> {
        let tf = self.tg().tf;
        if !(0.0..=tf).contains(&t) {
            return Err(Error::Parameter(format!("t = {t} outside [0, {tf}]")));
        }
        if !(eps > 0.0) {
            return Err(Error::Parameter("eps must be positive".into()));
        }
        if order > 1 {
            return Err(Error::Unsupported(format!("expansion order {order} (only 0 and 1)")));
        }
        let xi = t / eps;
        let psi = (tf - t) / eps;
        let lay = self.layout();
        let off = lay.offsets();
        let st0 = self.asym.outer_state(&self.outer0, t);
        let z20_bar = self.asym.z2_of(t, &st0);
        let mu20_bar = self.asym.mu2_of(t, &st0);
        let l = &self.left;

        let mut y = DVector::zeros(lay.dim());
        let mut z1 = st0.z1.clone();
        let mut z2 = &z20_bar + l.z20.eval(xi);
        let mut lu1 = st0.lu1.clone();
        let mut lu2 = l.lu20.eval(xi);
        let mut lv1 = st0.lv1.clone();
        let mut lv2 = l.lv20.eval(xi);
        let mut mu1 = st0.mu1.clone();
        let mut mu2 = &mu20_bar + l.mu20.eval(xi);

        if order >= 1 {
            let st1 = self.asym.outer_state(&self.outer1, t);
            let z21_bar = self.asym.z2_of(t, &st1);
            let mu21_bar = self.asym.mu2_of(t, &st1);
            let lv21_bar = self.asym.lv21_of(t, &st0);
            let lu21_bar = self.asym.lu21_of(t, &st0);
            let r = &self.right;
            z1 += (&st1.z1 + l.z11.eval(xi)) * eps;
            z2 += (&z21_bar + l.z21.eval(xi) + r.z21.eval(psi)) * eps;
            lu1 += (&st1.lu1 + l.lu11.eval(xi)) * eps;
            lu2 += (&lu21_bar + l.lu21.eval(xi) + r.lu21.eval(psi)) * eps;
            lv1 += (&st1.lv1 + l.lv11.eval(xi)) * eps;
            lv2 += (&lv21_bar + l.lv21.eval(xi) + r.lv21.eval(psi)) * eps;
            mu1 += (&st1.mu1 + l.mu11.eval(xi)) * eps;
            mu2 += (&mu21_bar + l.mu21.eval(xi) + r.mu21.eval(psi)) * eps;
        }

        y.rows_mut(off[0], lay.m).copy_from(&z1);
        y.rows_mut(off[1], lay.s).copy_from(&z2);
        y.rows_mut(off[2], lay.m).copy_from(&lu1);
        y.rows_mut(off[3], lay.s).copy_from(&lu2);
        y.rows_mut(off[4], lay.m).copy_from(&lv1);
        y.rows_mut(off[5], lay.s).copy_from(&lv2);
        y.rows_mut(off[6], lay.m).copy_from(&mu1);
        y.rows_mut(off[7], lay.s).copy_from(&mu2);
        Ok(y)
    }

    /// Asymptotically suboptimal controls `(û, v̂)` at time `t`:
    /// `û = −B_u1ᵀλu1¹ − εB_u2ᵀλu2¹`, `v̂ = −λv2¹/ε`.
    pub fn hat_controls(&self, t: f64, eps: f64, order: u8) -> Result<(DVector<f64>, DVector<f64>)> {
        let y = self.eval_scaled(t, eps, order)?;
        let lay = self.layout();
        let off = lay.offsets();
        let tg = self.tg();
        let lu1 = y.rows(off[2], lay.m);
        let lu2 = y.rows(off[3], lay.s);
        let lv2 = y.rows(off[5], lay.s);
        let u = -tg.b_u1.eval(t).transpose() * lu1 - tg.b_u2.eval(t).transpose() * lu2 * eps;
        let v = -DVector::from_column_slice(lv2.as_slice()) / eps;
        Ok((u, v))
    }

    /// Simplified leader control `ũ(t) = −B_u1ᵀ(t)λ̄u1,0(t)`; ε-free.
    pub fn tilde_u(&self, t: f64) -> DVector<f64> {
        let st0 = self.asym.outer_state(&self.outer0, t);
        -self.tg().b_u1.eval(t).transpose() * st0.lu1
    }

    /// Simplified follower control
    /// `ṽ(t, ε) = −(1/ε)λv2,0⁰(t/ε) − λ̄v2,1(t)`.
    pub fn tilde_v(&self, t: f64, eps: f64) -> DVector<f64> {
        let st0 = self.asym.outer_state(&self.outer0, t);
        -self.left.lv20.eval(t / eps) / eps - self.asym.lv21_of(t, &st0)
    }

    /// ε-free limit costs `(J̄_u,0, J̄_v,0)` along the order-0 outer
    /// trajectory.
    pub fn eps_free_costs(&self) -> (f64, f64) {
        let tg = self.tg();
        let (nodes, weights) = quad_points(&self.outer0.shooting.mesh, 8);
        let states = self.asym.outer_states(&self.outer0, &nodes);
        let mut ju = 0.0;
        let mut jv = 0.0;
        for ((&t, &w), st) in nodes.iter().zip(&weights).zip(&states) {
            let z2 = self.asym.z2_of(t, st);
            let mut z = DVector::zeros(tg.n);
            z.rows_mut(0, self.asym.m()).copy_from(&st.z1);
            z.rows_mut(self.asym.m(), tg.s).copy_from(&z2);
            let du = tg.d_u.eval(t);
            let su1 = tg.s_u1.eval(t);
            let dv1 = tg.d_v1.eval(t);
            let dv2 = tg.d_v2.eval(t);
            let bu1 = tg.b_u1.eval(t);
            let gvu = tg.g_vu.eval(t);
            let z1 = &st.z1;
            let iu = (z.transpose() * &du * &z)[(0, 0)]
                + (st.lu1.transpose() * &su1 * &st.lu1)[(0, 0)];
            let iv = (z1.transpose() * &dv1 * z1)[(0, 0)]
                + (z2.transpose() * &dv2 * &z2)[(0, 0)]
                + (st.lu1.transpose() * &bu1 * &gvu * bu1.transpose() * &st.lu1)[(0, 0)];
            ju += w * iu;
            jv += w * iv;
        }
        (0.5 * ju, 0.5 * jv)
    }
}

/// Composite Gauss–Legendre nodes and weights over a mesh.
fn quad_points(mesh: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in mesh.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (x, wt) in xs.iter().zip(&ws) {
            nodes.push(c + h * x);
            weights.push(h * wt);
        }
    }
    (nodes, weights)
}

/// Result of re-deriving the leader's ε-free limit problem independently.
#[derive(Debug, Clone)]
pub struct ReducedOcpCheck {
    /// Optimal value of the reduced problem's cost.
    pub j_u_star: f64,
    /// `J̄_u,0` recomputed from the order-0 outer solution.
    pub j_u_zero: f64,
    /// Max over a sample grid of `‖ū*(t) − (−B_u1ᵀλ̄u1,0(t))‖`.
    pub max_control_gap: f64,
}

/// Independently solve the reduced (ε-free) leader optimal control
/// problem by its own Pontryagin two-point system and compare against the
/// order-0 outer solution.
///
/// The reduced problem has state `x = (z̄1, λ̄v1)`, control `ū` entering
/// through `(B_u1; 0)`, a positive semi-definite state cost `Q(t)` and unit
/// control cost. Its stationarity system (adjoint `p = (p1, p2)`,
/// `ū = −B_u1ᵀp1`) is assembled here from `F`, `Q`, `B` directly — a
/// different derivation path from the outer system construction.
pub fn reduced_ocp_check(asym: &Asymptotics, outer0: &OuterSolution) -> Result<ReducedOcpCheck> {
    let tg = &asym.tg;
    let m = asym.m();
    let dim = 4 * m;
    let (z01, _) = tg.z0_split();

    let dv2_inv = tg.d_v2.inverse();
    let a2t = tg.a2.transpose();
    let f12 = tg.a2.mul(&dv2_inv).mul(&a2t).neg();
    let q12 = tg.d_u2.mul(&dv2_inv).mul(&a2t).neg();
    let q22 = tg.a2.mul(&dv2_inv).mul(&tg.d_u3).mul(&dv2_inv).mul(&a2t);

    let matrix = |t: f64| {
        let a1 = tg.a1.eval(t);
        let dv1 = tg.d_v1.eval(t);
        let bu1 = tg.b_u1.eval(t);
        let f12_t = f12.eval(t);
        let q11 = tg.d_u1.eval(t);
        let q12_t = q12.eval(t);
        let q22_t = q22.eval(t);
        let mut g = DMatrix::zeros(dim, dim);
        let mut put = |r: usize, c: usize, b: &DMatrix<f64>| {
            g.view_mut((r * m, c * m), (m, m)).copy_from(b);
        };
        // x' = F x − B Bᵀ p, p' = −Q x − Fᵀ p; ordering (z̄1, λ̄v1, p1, p2).
        put(0, 0, &a1);
        put(0, 1, &f12_t);
        put(0, 2, &(-(&bu1 * bu1.transpose())));
        put(1, 0, &(-&dv1));
        put(1, 1, &(-a1.transpose()));
        put(2, 0, &(-&q11));
        put(2, 1, &(-&q12_t));
        put(2, 2, &(-a1.transpose()));
        put(2, 3, &dv1);
        put(3, 0, &(-q12_t.transpose()));
        put(3, 1, &(-&q22_t));
        put(3, 2, &(-&f12_t));
        put(3, 3, &a1);
        g
    };

    // Transversality: the free components of x at each endpoint zero the
    // matching adjoint components — p2(0) = 0, p1(t_f) = 0; the fixed
    // components are z̄1(0) = z0,1, λ̄v1(t_f) = 0.
    let mut left_map = DMatrix::zeros(2 * m, dim);
    left_map.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    left_map.view_mut((m, 3 * m), (m, m)).copy_from(&DMatrix::identity(m, m));
    let mut left_val = DVector::zeros(2 * m);
    left_val.rows_mut(0, m).copy_from(&z01);
    let mut right_map = DMatrix::zeros(2 * m, dim);
    right_map.view_mut((0, m), (m, m)).copy_from(&DMatrix::identity(m, m));
    right_map.view_mut((m, 2 * m), (m, m)).copy_from(&DMatrix::identity(m, m));

    let bvp = LinearBvp {
        dim,
        t0: 0.0,
        tf: tg.tf,
        matrix: &matrix,
        forcing: None,
        left_map,
        left_val,
        right_map,
        right_val: DVector::zeros(2 * m),
    };
    let opts = BvpOptions { tol: 1e-11, boundary_tol: 1e-12, max_refine: 8 };
    let sh = solve(&bvp, &uniform_mesh(0.0, tg.tf, 16), &opts)
        .map_err(|e| Error::Unsolvable(format!("reduced optimal control problem: {e}")))?;

    // Optimal cost of the reduced problem, J̄_u* = ½∫ xᵀQx + ūᵀū dt.
    let (nodes, weights) = quad_points(&sh.mesh, 8);
    let xs = sh.eval_many(&matrix, None, &nodes);
    let mut j_u_star = 0.0;
    let mut max_gap: f64 = 0.0;
    let outer_states = asym.outer_states(outer0, &nodes);
    for (((&t, &w), x), st0) in nodes.iter().zip(&weights).zip(&xs).zip(&outer_states) {
        let z1 = x.rows(0, m);
        let lv1 = x.rows(m, m);
        let p1 = x.rows(2 * m, m);
        let q11 = tg.d_u1.eval(t);
        let q12_t = q12.eval(t);
        let q22_t = q22.eval(t);
        let bu1 = tg.b_u1.eval(t);
        let u = -(bu1.transpose() * p1);
        let state_cost = (z1.transpose() * &q11 * z1)[(0, 0)]
            + 2.0 * (z1.transpose() * &q12_t * lv1)[(0, 0)]
            + (lv1.transpose() * &q22_t * lv1)[(0, 0)];
        j_u_star += 0.5 * w * (state_cost + u.dot(&u));
        let u_outer = -(bu1.transpose() * &st0.lu1);
        max_gap = max_gap.max((&u - u_outer).amax());
    }

    // J̄_u,0 from the outer solution (same integrand written through D_u).
    let mut j_u_zero = 0.0;
    for ((&t, &w), st) in nodes.iter().zip(&weights).zip(&outer_states) {
        let z2 = asym.z2_of(t, st);
        let mut z = DVector::zeros(tg.n);
        z.rows_mut(0, m).copy_from(&st.z1);
        z.rows_mut(m, tg.s).copy_from(&z2);
        let du = tg.d_u.eval(t);
        let su1 = tg.s_u1.eval(t);
        j_u_zero += 0.5
            * w
            * ((z.transpose() * &du * &z)[(0, 0)] + (st.lu1.transpose() * &su1 * &st.lu1)[(0, 0)]);
    }

    Ok(ReducedOcpCheck { j_u_star, j_u_zero, max_control_gap: max_gap })
}
