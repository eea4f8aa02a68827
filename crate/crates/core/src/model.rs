//! Game description, assumption validation, and the state transformation.
//!
//! The original game has dynamics `dZ/dt = 𝒜Z + ℬ_u u + ℬ_v v` and
//! quadratic costs with state weights `𝒟_u`, `𝒟_v` and control cross
//! weights `G_uv`, `G_vu` (own-control weights are normalized to scaled
//! identities). The transformation `Z = R_v z` with
//!
//! ```text
//! L_v = B_c − ℬ_v (ℬ_vᵀ 𝒟_v ℬ_v)⁻¹ ℬ_vᵀ 𝒟_v B_c,   R_v = (L_v, ℬ_v)
//! ```
//!
//! normalizes the follower's input channel to `B_v = (0; I_s)` and makes
//! the follower's state weight block-diagonal, `D_v = diag(D_v1, D_v2)`
//! with `D_v1 ⪰ 0` and `D_v2 ≻ 0`. All downstream solvers work on the
//! transformed game.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::linalg::sym_min_eig;
use crate::matfn::MatrixFunction;
use crate::{Error, Result};

/// Default number of sample times for pointwise matrix-function checks.
pub const DEFAULT_SAMPLES: usize = 41;

/// The original two-player game: dynamics, cost weights, initial state,
/// horizon, and the scalar own-control weights of the two players
/// (`weight_u = 1`, `weight_v = ε²` is the cheap-follower regime).
#[derive(Debug, Clone)]
pub struct GameSpec {
    /// State dimension.
    pub n: usize,
    /// Leader control dimension.
    pub r: usize,
    /// Follower control dimension (`s < n`).
    pub s: usize,
    /// Horizon.
    pub tf: f64,
    /// Dynamics matrix 𝒜(t), n×n.
    pub a_cal: MatrixFunction,
    /// Leader input matrix ℬ_u(t), n×r.
    pub b_u_cal: MatrixFunction,
    /// Follower input matrix ℬ_v(t), n×s.
    pub b_v_cal: MatrixFunction,
    /// Leader state weight 𝒟_u(t), n×n symmetric PSD.
    pub d_u_cal: MatrixFunction,
    /// Follower state weight 𝒟_v(t), n×n symmetric PSD.
    pub d_v_cal: MatrixFunction,
    /// Leader's weight on the follower's control, s×s.
    pub g_uv: MatrixFunction,
    /// Follower's weight on the leader's control, r×r.
    pub g_vu: MatrixFunction,
    /// Initial state Z₀.
    pub z0: DVector<f64>,
    /// Leader own-control weight α > 0.
    pub weight_u: f64,
    /// Follower own-control weight β > 0 (ε² in the cheap regime).
    pub weight_v: f64,
}

impl GameSpec {
    /// Validate shapes and basic scalar invariants.
    pub fn validate_shapes(&self) -> Result<()> {
        let n = self.n;
        let checks = [
            ("A", &self.a_cal, n, n),
            ("B_u", &self.b_u_cal, n, self.r),
            ("B_v", &self.b_v_cal, n, self.s),
            ("D_u", &self.d_u_cal, n, n),
            ("D_v", &self.d_v_cal, n, n),
            ("G_uv", &self.g_uv, self.s, self.s),
            ("G_vu", &self.g_vu, self.r, self.r),
        ];
        for (name, m, rows, cols) in checks {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Dimension(format!(
                    "{name}: expected {rows}x{cols}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if self.z0.len() != n {
            return Err(Error::Dimension(format!("Z0: expected length {n}, got {}", self.z0.len())));
        }
        if self.r > n || self.s >= n {
            return Err(Error::Dimension(format!(
                "dimensions must satisfy r ≤ n and s < n (n={n}, r={}, s={})",
                self.r, self.s
            )));
        }
        if !(self.tf > 0.0) {
            return Err(Error::Parameter(format!("t_f must be positive, got {}", self.tf)));
        }
        if !(self.weight_u > 0.0) || !(self.weight_v > 0.0) {
            return Err(Error::Parameter("control weights must be positive".into()));
        }
        Ok(())
    }

    /// Equally spaced sample times on `[0, t_f]`.
    pub fn sample_times(&self, samples: usize) -> Vec<f64> {
        let k = samples.max(2) - 1;
        (0..=k).map(|i| self.tf * i as f64 / k as f64).collect()
    }
}

/// Outcome of one assumption check.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    /// Assumption label ("A1" … "A6").
    pub name: &'static str,
    /// Whether the check passed at every sampled time.
    pub pass: bool,
    /// Time of the worst violation (or of the worst margin when passing).
    pub worst_t: f64,
    /// Human-readable evidence: offending eigenvalue, determinant, rank.
    pub detail: String,
    /// True for checks guaranteed by the representation (A5, A6).
    pub structural: bool,
}

/// Report of all assumption checks.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Individual check outcomes, in assumption order.
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    /// True when every assumption holds.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Error out on the first failing assumption.
    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.pass) {
            None => Ok(()),
            Some(c) => Err(Error::Assumption { name: c.name, t: c.worst_t, detail: c.detail.clone() }),
        }
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}: {} (worst t = {:.6}; {})",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.worst_t,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// PSD tolerance: minimum eigenvalue ≥ −1e−10·(1 + max-norm).
fn psd_margin(m: &DMatrix<f64>) -> (f64, f64) {
    let tol = 1e-10 * (1.0 + m.amax());
    (sym_min_eig(m), tol)
}

/// Check assumptions (A1)–(A6) at `samples` equally spaced times.
///
/// (A1) full column rank of ℬ_v; (A2) 𝒟_u, 𝒟_v positive semi-definite;
/// (A3) positive definiteness of the control cross weights (identically
/// zero weights, i.e. absent cross terms, are accepted and noted);
/// (A4) invertibility of ℬ_vᵀ𝒟_vℬ_v; (A5)–(A6) smoothness, guaranteed by
/// the polynomial representation and reported as structural.
pub fn validate_assumptions(g: &GameSpec, samples: usize) -> Result<AssumptionReport> {
    g.validate_shapes()?;
    let ts = g.sample_times(samples);
    let mut checks = Vec::new();

    // A1: min singular value of ℬ_v(t) bounded away from zero.
    {
        let (mut worst, mut worst_t) = (f64::INFINITY, 0.0);
        for &t in &ts {
            let bv = g.b_v_cal.eval(t);
            let sv = bv.svd(false, false).singular_values;
            let smin = sv.min();
            if smin < worst {
                worst = smin;
                worst_t = t;
            }
        }
        let tol = 1e-10 * (1.0 + g.b_v_cal.eval(worst_t).amax());
        checks.push(AssumptionCheck {
            name: "A1",
            pass: worst > tol,
            worst_t,
            detail: format!("min singular value of B_v = {worst:e}"),
            structural: false,
        });
    }

    // A2: 𝒟_u and 𝒟_v positive semi-definite.
    for (name, m) in [("A2", &g.d_u_cal), ("A2", &g.d_v_cal)] {
        let (mut worst, mut worst_t, mut tol_at) = (f64::INFINITY, 0.0, 0.0);
        for &t in &ts {
            let (min, tol) = psd_margin(&m.eval(t));
            if min + tol < worst + tol_at {
                worst = min;
                worst_t = t;
                tol_at = tol;
            }
        }
        checks.push(AssumptionCheck {
            name,
            pass: worst >= -tol_at,
            worst_t,
            detail: format!("min eigenvalue = {worst:e}"),
            structural: false,
        });
    }

    // A3: cross weights positive definite, or identically zero (absent).
    for m in [&g.g_uv, &g.g_vu] {
        if m.is_zero(0.0) {
            checks.push(AssumptionCheck {
                name: "A3",
                pass: true,
                worst_t: 0.0,
                detail: "cross weight identically zero (term absent)".into(),
                structural: false,
            });
            continue;
        }
        let (mut worst, mut worst_t, mut tol_at) = (f64::INFINITY, 0.0, 0.0);
        for &t in &ts {
            let (min, tol) = psd_margin(&m.eval(t));
            if min < worst {
                worst = min;
                worst_t = t;
                tol_at = tol;
            }
        }
        checks.push(AssumptionCheck {
            name: "A3",
            pass: worst > tol_at,
            worst_t,
            detail: format!("min eigenvalue = {worst:e}"),
            structural: false,
        });
    }

    // A4: det(ℬ_vᵀ 𝒟_v ℬ_v) ≠ 0.
    {
        let (mut worst, mut worst_t) = (f64::INFINITY, 0.0);
        for &t in &ts {
            let bv = g.b_v_cal.eval(t);
            let m = bv.transpose() * g.d_v_cal.eval(t) * &bv;
            let scale = 1.0 + m.amax();
            let det = m.determinant().abs() / scale.powi(m.nrows() as i32);
            if det < worst {
                worst = det;
                worst_t = t;
            }
        }
        checks.push(AssumptionCheck {
            name: "A4",
            pass: worst > 1e-12,
            worst_t,
            detail: format!("scaled |det(B_vᵀ D_v B_v)| = {worst:e}"),
            structural: false,
        });
    }

    // A5/A6: smoothness is automatic for polynomial entries.
    for (name, what) in [("A5", "C¹ of A, B_u, D_u, G_uv, G_vu"), ("A6", "C² of B_v, D_v")] {
        checks.push(AssumptionCheck {
            name,
            pass: true,
            worst_t: 0.0,
            detail: format!("{what}: polynomial entries, smooth by construction"),
            structural: true,
        });
    }

    Ok(AssumptionReport { checks })
}

/// Deterministic orthogonal completion of the column space of `ℬ_v(0)`.
///
/// Orthonormalizes the columns of `ℬ_v(0)`, then greedily picks the
/// standard basis vectors with the largest residual after projection
/// (column-pivoted Gram–Schmidt). For time-varying `ℬ_v` the completed
/// basis is extended as constants; degeneracy is caught by the complement
/// check in [`build_reduction`].
pub fn auto_complement(g: &GameSpec) -> Result<MatrixFunction> {
    let n = g.n;
    let s = g.s;
    let bv0 = g.b_v_cal.eval(0.0);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..s {
        let mut v: DVector<f64> = bv0.column(j).into_owned();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm <= 1e-12 * (1.0 + bv0.amax()) {
            return Err(Error::Assumption {
                name: "A1",
                t: 0.0,
                detail: "B_v(0) is column rank deficient".into(),
            });
        }
        basis.push(v / norm);
    }
    let mut complement = Vec::with_capacity(n - s);
    while complement.len() < n - s {
        // Pick the standard basis vector with the largest residual.
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn + 1e-14) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        let v = v / norm;
        basis.push(v.clone());
        complement.push(v);
    }
    let bc = DMatrix::from_columns(&complement);
    Ok(MatrixFunction::constant(&bc))
}

/// Build the reduction matrices `L_v`, `R_v` from the game and a
/// complement `B_c` (or the automatic completion when `None`).
///
/// Fails if `(B_c, ℬ_v)` — equivalently `R_v` — is singular at a sampled
/// time.
pub fn build_reduction(
    g: &GameSpec,
    b_c: Option<&MatrixFunction>,
) -> Result<(MatrixFunction, MatrixFunction)> {
    g.validate_shapes()?;
    let auto;
    let b_c = match b_c {
        Some(m) => {
            if m.nrows() != g.n || m.ncols() != g.n - g.s {
                return Err(Error::Dimension(format!(
                    "B_c: expected {}x{}, got {}x{}",
                    g.n,
                    g.n - g.s,
                    m.nrows(),
                    m.ncols()
                )));
            }
            m
        }
        None => {
            auto = auto_complement(g)?;
            &auto
        }
    };

    // (B_c, ℬ_v) must be invertible everywhere sampled.
    let ts = g.sample_times(DEFAULT_SAMPLES);
    for &t in &ts {
        let stacked = b_c.eval(t).hstack(&g.b_v_cal.eval(t));
        let det = stacked.determinant();
        let scale = (1.0 + stacked.amax()).powi(g.n as i32);
        if det.abs() <= 1e-12 * scale {
            return Err(Error::InvalidComplement { t, det });
        }
    }

    // L_v = B_c − ℬ_v (ℬ_vᵀ𝒟_vℬ_v)⁻¹ ℬ_vᵀ𝒟_v B_c, exact rational arithmetic.
    let bv = &g.b_v_cal;
    let bvt_dv = bv.transpose().mul(&g.d_v_cal);
    let d_v2_raw = bvt_dv.mul(bv);
    let inv = d_v2_raw.inverse();
    let l_v = b_c.sub(&bv.mul(&inv).mul(&bvt_dv.mul(b_c)));
    let r_v = l_v.hstack(bv);

    // det R_v(t) ≠ 0 at all sampled times.
    for &t in &ts {
        let rv = r_v.eval(t);
        let det = rv.determinant();
        let scale = (1.0 + rv.amax()).powi(g.n as i32);
        if det.abs() <= 1e-12 * scale {
            return Err(Error::InvalidComplement { t, det });
        }
    }
    Ok((l_v, r_v))
}

/// The transformed game with its slow/fast block partition (`n−s` / `s`).
#[derive(Debug, Clone)]
pub struct TransformedGame {
    /// State dimension.
    pub n: usize,
    /// Leader control dimension.
    pub r: usize,
    /// Follower control dimension.
    pub s: usize,
    /// Horizon.
    pub tf: f64,
    /// Transformed dynamics `A = R_v⁻¹(𝒜R_v − dR_v/dt)`.
    pub a: MatrixFunction,
    /// Transformed leader input `B_u = R_v⁻¹ℬ_u`.
    pub b_u: MatrixFunction,
    /// Transformed leader state weight `D_u = R_vᵀ𝒟_uR_v`.
    pub d_u: MatrixFunction,
    /// Leader's weight on the follower's control (unchanged).
    pub g_uv: MatrixFunction,
    /// Follower's weight on the leader's control (unchanged).
    pub g_vu: MatrixFunction,
    /// Slow block of the follower state weight, `L_vᵀ𝒟_vL_v ⪰ 0`.
    pub d_v1: MatrixFunction,
    /// Fast block of the follower state weight, `ℬ_vᵀ𝒟_vℬ_v ≻ 0`.
    pub d_v2: MatrixFunction,
    /// Transformed initial state `z₀ = R_v⁻¹(0)Z₀`.
    pub z0: DVector<f64>,
    /// Blocks of `A`: slow-slow.
    pub a1: MatrixFunction,
    /// Blocks of `A`: slow-fast.
    pub a2: MatrixFunction,
    /// Blocks of `A`: fast-slow.
    pub a3: MatrixFunction,
    /// Blocks of `A`: fast-fast.
    pub a4: MatrixFunction,
    /// Blocks of `D_u`.
    pub d_u1: MatrixFunction,
    /// Blocks of `D_u` (off-diagonal).
    pub d_u2: MatrixFunction,
    /// Blocks of `D_u` (fast-fast).
    pub d_u3: MatrixFunction,
    /// Blocks of `S_u = B_uB_uᵀ`.
    pub s_u1: MatrixFunction,
    /// Blocks of `S_u` (off-diagonal).
    pub s_u2: MatrixFunction,
    /// Blocks of `S_u` (fast-fast).
    pub s_u3: MatrixFunction,
    /// Top block of `B_u`.
    pub b_u1: MatrixFunction,
    /// Bottom block of `B_u`.
    pub b_u2: MatrixFunction,
    /// Reduction matrix `R_v`.
    pub r_v: MatrixFunction,
    /// Reduction matrix `L_v`.
    pub l_v: MatrixFunction,
}

impl TransformedGame {
    /// Slow dimension `n − s`.
    pub fn m(&self) -> usize {
        self.n - self.s
    }

    /// Slow/fast split of the transformed initial state.
    pub fn z0_split(&self) -> (DVector<f64>, DVector<f64>) {
        let m = self.m();
        (self.z0.rows(0, m).into_owned(), self.z0.rows(m, self.s).into_owned())
    }
}

/// Apply the transformation of Proposition 1 and populate all blocks.
pub fn transform_game(g: &GameSpec, l_v: &MatrixFunction, r_v: &MatrixFunction) -> Result<TransformedGame> {
    let (n, s) = (g.n, g.s);
    let m = n - s;
    let r_v_inv = r_v.inverse();

    let a = r_v_inv.mul(&g.a_cal.mul(r_v).sub(&r_v.deriv()));
    let b_u = r_v_inv.mul(&g.b_u_cal);
    let b_v = r_v_inv.mul(&g.b_v_cal);
    let d_u = r_v.transpose().mul(&g.d_u_cal).mul(r_v);
    let d_v_full = r_v.transpose().mul(&g.d_v_cal).mul(r_v);
    let d_v1 = l_v.transpose().mul(&g.d_v_cal).mul(l_v);
    let d_v2 = g.b_v_cal.transpose().mul(&g.d_v_cal).mul(&g.b_v_cal);

    // Structural identities of Proposition 1, checked numerically.
    let ts = g.sample_times(DEFAULT_SAMPLES);
    for &t in &ts {
        let bvt = b_v.eval(t);
        let mut expect = DMatrix::zeros(n, s);
        expect.view_mut((m, 0), (s, s)).copy_from(&DMatrix::identity(s, s));
        if (bvt - &expect).amax() > 1e-10 {
            return Err(Error::Inconsistency(format!(
                "transformed B_v differs from (0; I_s) at t = {t}"
            )));
        }
        let off = d_v_full.eval(t).view((0, m), (m, s)).amax();
        if off > 1e-10 * (1.0 + d_v_full.eval(t).amax()) {
            return Err(Error::Inconsistency(format!("transformed D_v not block-diagonal at t = {t}")));
        }
        let (min2, tol2) = psd_margin(&d_v2.eval(t));
        if min2 <= tol2 {
            return Err(Error::Assumption {
                name: "A4",
                t,
                detail: format!("D_v2 not positive definite (min eigenvalue {min2:e})"),
            });
        }
        let (min1, tol1) = psd_margin(&d_v1.eval(t));
        if min1 < -tol1 {
            return Err(Error::Inconsistency(format!(
                "D_v1 not positive semi-definite at t = {t} (min eigenvalue {min1:e})"
            )));
        }
    }

    let z0 = r_v
        .eval(0.0)
        .lu()
        .solve(&g.z0)
        .ok_or_else(|| Error::InvalidComplement { t: 0.0, det: 0.0 })?;

    let s_u = b_u.mul(&b_u.transpose());

    Ok(TransformedGame {
        n,
        r: g.r,
        s,
        tf: g.tf,
        a1: a.block(0, 0, m, m),
        a2: a.block(0, m, m, s),
        a3: a.block(m, 0, s, m),
        a4: a.block(m, m, s, s),
        d_u1: d_u.block(0, 0, m, m),
        d_u2: d_u.block(0, m, m, s),
        d_u3: d_u.block(m, m, s, s),
        s_u1: s_u.block(0, 0, m, m),
        s_u2: s_u.block(0, m, m, s),
        s_u3: s_u.block(m, m, s, s),
        b_u1: b_u.block(0, 0, m, g.r),
        b_u2: b_u.block(m, 0, s, g.r),
        a,
        b_u,
        d_u,
        g_uv: g.g_uv.clone(),
        g_vu: g.g_vu.clone(),
        d_v1,
        d_v2,
        z0,
        r_v: r_v.clone(),
        l_v: l_v.clone(),
    })
}

/// Convenience: validate, build the reduction (auto or given complement),
/// and transform in one step.
pub fn prepare(g: &GameSpec, b_c: Option<&MatrixFunction>) -> Result<TransformedGame> {
    validate_assumptions(g, DEFAULT_SAMPLES)?.ensure()?;
    let (l_v, r_v) = build_reduction(g, b_c)?;
    transform_game(g, &l_v, &r_v)
}

/// Map a transformed-coordinate trajectory back to original coordinates:
/// `Z(t_k) = R_v(t_k) z(t_k)`.
pub fn map_state_back(traj: &[(f64, DVector<f64>)], r_v: &MatrixFunction) -> Vec<(f64, DVector<f64>)> {
    traj.iter().map(|(t, z)| (*t, r_v.eval(*t) * z)).collect()
}

// ---------------------------------------------------------------------------
// Game-spec document parsing.
// ---------------------------------------------------------------------------

/// One matrix entry in a game-spec document: either a constant or a list
/// of polynomial coefficients in `t` (ascending).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EntrySpec {
    Const(f64),
    Poly(Vec<f64>),
}

#[derive(Debug, Deserialize)]
struct GameDoc {
    n: usize,
    r: usize,
    s: usize,
    tf: f64,
    #[serde(rename = "Z0")]
    z0: Vec<f64>,
    #[serde(default = "one")]
    weight_u: f64,
    #[serde(default = "one")]
    weight_v: f64,
    #[serde(rename = "A")]
    a: Vec<Vec<EntrySpec>>,
    #[serde(rename = "B_u")]
    b_u: Vec<Vec<EntrySpec>>,
    #[serde(rename = "B_v")]
    b_v: Vec<Vec<EntrySpec>>,
    #[serde(rename = "D_u")]
    d_u: Vec<Vec<EntrySpec>>,
    #[serde(rename = "D_v")]
    d_v: Vec<Vec<EntrySpec>>,
    #[serde(rename = "G_uv", default)]
    g_uv: Option<Vec<Vec<EntrySpec>>>,
    #[serde(rename = "G_vu", default)]
    g_vu: Option<Vec<Vec<EntrySpec>>>,
}

fn one() -> f64 {
    1.0
}

fn matrix_from_doc(name: &str, rows: usize, cols: usize, doc: &[Vec<EntrySpec>]) -> Result<MatrixFunction> {
    if doc.len() != rows || doc.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{name}: expected a {rows}x{cols} nested array")));
    }
    let entries = doc
        .iter()
        .flat_map(|row| {
            row.iter().map(|e| match e {
                EntrySpec::Const(c) => vec![*c],
                EntrySpec::Poly(p) => {
                    if p.is_empty() {
                        vec![0.0]
                    } else {
                        p.clone()
                    }
                }
            })
        })
        .collect();
    let pm = crate::matfn::PolyMatrix::new(rows, cols, entries)?;
    Ok(MatrixFunction::from_poly(pm))
}

/// Parse a game-spec document (JSON). See the README for the schema;
/// matrix entries are either numbers (constants) or coefficient arrays
/// (polynomials in `t`, ascending). `G_uv`/`G_vu` default to zero.
pub fn parse_game_spec(text: &str) -> Result<GameSpec> {
    let doc: GameDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let (n, r, s) = (doc.n, doc.r, doc.s);
    let g_uv = match &doc.g_uv {
        Some(m) => matrix_from_doc("G_uv", s, s, m)?,
        None => MatrixFunction::zeros(s, s),
    };
    let g_vu = match &doc.g_vu {
        Some(m) => matrix_from_doc("G_vu", r, r, m)?,
        None => MatrixFunction::zeros(r, r),
    };
    let g = GameSpec {
        n,
        r,
        s,
        tf: doc.tf,
        a_cal: matrix_from_doc("A", n, n, &doc.a)?,
        b_u_cal: matrix_from_doc("B_u", n, r, &doc.b_u)?,
        b_v_cal: matrix_from_doc("B_v", n, s, &doc.b_v)?,
        d_u_cal: matrix_from_doc("D_u", n, n, &doc.d_u)?,
        d_v_cal: matrix_from_doc("D_v", n, n, &doc.d_v)?,
        g_uv,
        g_vu,
        z0: DVector::from_vec(doc.z0),
        weight_u: doc.weight_u,
        weight_v: doc.weight_v,
    };
    g.validate_shapes()?;
    Ok(g)
}

trait HStackExt {
    fn hstack(&self, other: &DMatrix<f64>) -> DMatrix<f64>;
}

impl HStackExt for DMatrix<f64> {
    fn hstack(&self, other: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols() + other.ncols());
        out.view_mut((0, 0), (self.nrows(), self.ncols())).copy_from(self);
        out.view_mut((0, self.ncols()), (other.nrows(), other.ncols())).copy_from(other);
        out
    }
}
