//! Closed-form boundary-layer functions.
//!
//! Every layer quantity that appears in the first-order expansion is a sum
//! of terms of the shape `f(ξ) = C·e^{Kξ}·w` with `K` Hurwitz, and all the
//! operations the expansion needs stay inside that class:
//!
//! * multiplying by `ξ` augments the exponent to `[[K, I], [0, K]]`,
//! * sums concatenate blocks,
//! * the forward convolution `∫₀^ξ e^{−S(ξ−σ)} f(σ) dσ` is one block of
//!   the exponential of `[[−S, C], [0, K]]`,
//! * the tail integral `∫_ξ^∞ e^{−S(σ−ξ)} f(σ) dσ` is `X·e^{Kξ}·w` with
//!   `X` the solution of the Sylvester equation `SX − XK = C`,
//! * the total mass `∫₀^∞ f dξ` is `−C·K⁻¹·w`.
//!
//! Representing layer corrections this way keeps them exact for all ξ ≥ 0
//! (no grid, no aliasing of the fast decay) at the cost of growing the
//! internal exponent dimension with each convolution.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, solve_sylvester, spectral_abscissa};

/// One closed-form layer term `f(ξ) = C·e^{Kξ}·w`, `ξ ≥ 0`, with `K`
/// Hurwitz so that `f` decays exponentially.
///
/// Evaluation is hot (the simulator queries layer corrections inside
/// adaptive integrators), so each term caches dyadic powers
/// `e^{K·h·2^j}` of a fixed small step `h` at construction time; `eval`
/// then needs only matrix–vector products.
#[derive(Debug, Clone)]
pub struct LayerTerm {
    /// Output coefficient, `p × q`.
    pub c: DMatrix<f64>,
    /// Exponent matrix, `q × q`, all eigenvalues in the open left half
    /// plane.
    pub k: DMatrix<f64>,
    /// Input vector, length `q`.
    pub w: DVector<f64>,
    /// Slowest decay rate `−max Re λ(K) > 0`.
    decay: f64,
    /// Base step of the cached dyadic powers, `h‖K‖∞ ≤ 1/2`.
    h: f64,
    /// Beyond this ξ the term is below underflow level; `eval` returns 0.
    xi_cut: f64,
    /// `pow[j] = e^{K·h·2^j}`; shared by combinators that keep `K`.
    pow: Arc<Vec<DMatrix<f64>>>,
}

impl LayerTerm {
    /// Build a term, checking shapes and decay.
    pub fn new(c: DMatrix<f64>, k: DMatrix<f64>, w: DVector<f64>) -> Result<Self> {
        if !k.is_square() || c.ncols() != k.nrows() || w.len() != k.nrows() {
            return Err(Error::Dimension(format!(
                "layer term shapes: c {}x{}, k {}x{}, w {}",
                c.nrows(),
                c.ncols(),
                k.nrows(),
                k.ncols(),
                w.len()
            )));
        }
        let alpha = spectral_abscissa(&k);
        if alpha >= -1e-12 {
            return Err(Error::Parameter(format!(
                "layer exponent is not Hurwitz (spectral abscissa {alpha:.3e})"
            )));
        }
        Ok(Self::from_parts(c, k, w, -alpha))
    }

    /// Assemble a term whose decay rate is already known (same-spectrum
    /// rewrites such as [`Self::xi_mul`]), building the evaluation cache.
    fn from_parts(c: DMatrix<f64>, k: DMatrix<f64>, w: DVector<f64>, decay: f64) -> Self {
        let norm_inf = k
            .row_iter()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(f64::MIN_POSITIVE, f64::max);
        let h = 0.25f64.min(0.5 / norm_inf);
        // e^{−750} underflows f64, so the term is exactly zero past here.
        let xi_cut = 750.0 / decay;
        let levels = ((xi_cut / h).log2().ceil().max(0.0) as usize) + 1;
        let mut pow = Vec::with_capacity(levels);
        pow.push(expm(&(&k * h)));
        for j in 1..levels {
            let sq = &pow[j - 1] * &pow[j - 1];
            pow.push(sq);
        }
        Self { c, k, w, decay, h, xi_cut, pow: Arc::new(pow) }
    }

    /// Reuse an existing cache (combinators that keep `K` and `w`).
    fn with_coeff(&self, c: DMatrix<f64>) -> Self {
        Self {
            c,
            k: self.k.clone(),
            w: self.w.clone(),
            decay: self.decay,
            h: self.h,
            xi_cut: self.xi_cut,
            pow: Arc::clone(&self.pow),
        }
    }

    /// Apply `e^{Kr}` to `v` by a truncated Taylor series; `r ≤ h` keeps
    /// `‖Kr‖∞ ≤ 1/2`, so the series converges in a handful of terms.
    fn taylor_apply(&self, r: f64, v: &DVector<f64>) -> DVector<f64> {
        let mut y = v.clone();
        let mut term = v.clone();
        for i in 1..=30 {
            term = (&self.k * &term) * (r / i as f64);
            y += &term;
            if term.norm() <= 1e-18 * y.norm() {
                break;
            }
        }
        y
    }

    /// `C·e^{−Sξ}·w` for an SPD decay matrix `S`.
    pub fn decaying(c: DMatrix<f64>, s: &DMatrix<f64>, w: DVector<f64>) -> Result<Self> {
        Self::new(c, -s.clone(), w)
    }

    /// Output dimension.
    pub fn out_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Evaluate `f(ξ)` via the cached dyadic powers: split `ξ = m·h + r`,
    /// apply the Taylor remainder `e^{Kr}` to `w`, then the cached
    /// `e^{K·h·2^j}` for each set bit of `m` — matrix–vector work only.
    pub fn eval(&self, xi: f64) -> DVector<f64> {
        if xi >= self.xi_cut {
            return DVector::zeros(self.c.nrows());
        }
        let xi = xi.max(0.0);
        let steps = (xi / self.h).floor() as u64;
        let r = xi - steps as f64 * self.h;
        let mut y = self.taylor_apply(r, &self.w);
        for j in 0..64 {
            if steps >> j == 0 {
                break;
            }
            if steps >> j & 1 == 1 {
                if j >= self.pow.len() {
                    return DVector::zeros(self.c.nrows());
                }
                y = &self.pow[j] * y;
            }
        }
        &self.c * y
    }

    /// Left-multiply by a constant matrix: `M·f`.
    pub fn lmul(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.c.nrows() {
            return Err(Error::Dimension(format!(
                "lmul: {}x{} times output dim {}",
                m.nrows(),
                m.ncols(),
                self.c.nrows()
            )));
        }
        Ok(self.with_coeff(m * &self.c))
    }

    /// Scale by a constant.
    pub fn scale(&self, a: f64) -> Self {
        self.with_coeff(&self.c * a)
    }

    /// Multiply by the layer variable: `ξ·f(ξ)`.
    ///
    /// Since `K` and `I` commute inside `[[K, I], [0, K]]`,
    /// `e^{[[K,I],[0,K]]ξ} = [[e^{Kξ}, ξe^{Kξ}], [0, e^{Kξ}]]`, so
    /// `[C, 0]·e^{·ξ}·(0; w) = ξ·C·e^{Kξ}·w`.
    pub fn xi_mul(&self) -> Self {
        let q = self.k.nrows();
        let p = self.c.nrows();
        let mut k2 = DMatrix::zeros(2 * q, 2 * q);
        k2.view_mut((0, 0), (q, q)).copy_from(&self.k);
        k2.view_mut((q, q), (q, q)).copy_from(&self.k);
        k2.view_mut((0, q), (q, q)).copy_from(&DMatrix::identity(q, q));
        let mut c2 = DMatrix::zeros(p, 2 * q);
        c2.view_mut((0, 0), (p, q)).copy_from(&self.c);
        let mut w2 = DVector::zeros(2 * q);
        w2.rows_mut(q, q).copy_from(&self.w);
        // [[K, I], [0, K]] has the same spectrum as K.
        Self::from_parts(c2, k2, w2, self.decay)
    }

    /// Sum of two terms with equal output dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.c.nrows() != other.c.nrows() {
            return Err(Error::Dimension(format!(
                "add: output dims {} vs {}",
                self.c.nrows(),
                other.c.nrows()
            )));
        }
        let (qa, qb) = (self.k.nrows(), other.k.nrows());
        let p = self.c.nrows();
        let mut k = DMatrix::zeros(qa + qb, qa + qb);
        k.view_mut((0, 0), (qa, qa)).copy_from(&self.k);
        k.view_mut((qa, qa), (qb, qb)).copy_from(&other.k);
        let mut c = DMatrix::zeros(p, qa + qb);
        c.view_mut((0, 0), (p, qa)).copy_from(&self.c);
        c.view_mut((0, qa), (p, qb)).copy_from(&other.c);
        let mut w = DVector::zeros(qa + qb);
        w.rows_mut(0, qa).copy_from(&self.w);
        w.rows_mut(qa, qb).copy_from(&other.w);
        Self::new(c, k, w)
    }

    /// Sum a list of terms.
    pub fn sum(terms: &[Self]) -> Result<Self> {
        let mut it = terms.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::Parameter("sum of zero layer terms".into()))?
            .clone();
        it.try_fold(first, |acc, t| acc.add(t))
    }

    /// Forward convolution `g(ξ) = ∫₀^ξ e^{−S(ξ−σ)} f(σ) dσ`.
    ///
    /// The exponential of the block matrix `[[−S, C], [0, K]]` has the
    /// convolution kernel in its upper-right block, so `g` is again a
    /// layer term with exponent `[[−S, C], [0, K]]`.
    pub fn conv_forward(&self, s: &DMatrix<f64>) -> Result<Self> {
        let p = self.c.nrows();
        if s.nrows() != p || s.ncols() != p {
            return Err(Error::Dimension(format!(
                "conv_forward: S is {}x{}, term output dim {}",
                s.nrows(),
                s.ncols(),
                p
            )));
        }
        let q = self.k.nrows();
        let mut k = DMatrix::zeros(p + q, p + q);
        k.view_mut((0, 0), (p, p)).copy_from(&(-s));
        k.view_mut((0, p), (p, q)).copy_from(&self.c);
        k.view_mut((p, p), (q, q)).copy_from(&self.k);
        let mut c = DMatrix::zeros(p, p + q);
        c.view_mut((0, 0), (p, p)).copy_from(&DMatrix::identity(p, p));
        let mut w = DVector::zeros(p + q);
        w.rows_mut(p, q).copy_from(&self.w);
        Self::new(c, k, w)
    }

    /// Tail integral `g(ξ) = ∫_ξ^∞ e^{−S(σ−ξ)} f(σ) dσ = X·e^{Kξ}·w` with
    /// `SX − XK = C` (both `−S` and `K` Hurwitz, so the integral converges
    /// and the Sylvester equation is uniquely solvable).
    pub fn tail_integral(&self, s: &DMatrix<f64>) -> Result<Self> {
        let p = self.c.nrows();
        if s.nrows() != p || s.ncols() != p {
            return Err(Error::Dimension(format!(
                "tail_integral: S is {}x{}, term output dim {}",
                s.nrows(),
                s.ncols(),
                p
            )));
        }
        let x = solve_sylvester(s, &self.k, &self.c)?;
        Ok(self.with_coeff(x))
    }

    /// Plain tail integral `g(ξ) = ∫_ξ^∞ f(σ) dσ = −C·K⁻¹·e^{Kξ}·w`.
    pub fn tail_mass(&self) -> Result<Self> {
        let kinv = self
            .k
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Unsolvable("layer exponent is singular".into()))?;
        Ok(self.with_coeff(-(&self.c * kinv)))
    }

    /// Total mass `∫₀^∞ f(ξ) dξ = −C·K⁻¹·w`.
    pub fn total_integral(&self) -> Result<DVector<f64>> {
        let kinv = self
            .k
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Unsolvable("layer exponent is singular".into()))?;
        Ok(-(&self.c * (kinv * &self.w)))
    }

    /// The slowest decay rate: `−max Re λ(K)` > 0.
    pub fn decay_rate(&self) -> f64 {
        self.decay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_mesh};
    use approx::assert_relative_eq;

    fn composite(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let mesh: Vec<f64> = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
        integrate_mesh(8, &mesh, f)
    }

    fn sample_term() -> LayerTerm {
        // f(ξ) = C e^{−Sξ} w with a nontrivial 2×2 SPD S.
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.1]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.2, 0.8]);
        let w = DVector::from_column_slice(&[0.7, -1.3]);
        LayerTerm::decaying(c, &s, w).unwrap()
    }

    #[test]
    fn eval_matches_scalar_formula() {
        let s = DMatrix::from_element(1, 1, 1.8f64.sqrt());
        let t = LayerTerm::decaying(DMatrix::identity(1, 1), &s, DVector::from_element(1, 0.4))
            .unwrap();
        for xi in [0.0, 0.5, 3.0] {
            assert_relative_eq!(
                t.eval(xi)[0],
                0.4 * (-1.8f64.sqrt() * xi).exp(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn xi_mul_matches_pointwise() {
        let t = sample_term();
        let xt = t.xi_mul();
        for xi in [0.0, 0.3, 1.7, 4.0] {
            assert_relative_eq!(xt.eval(xi), t.eval(xi) * xi, epsilon = 1e-13);
        }
    }

    #[test]
    fn add_and_lmul_match_pointwise() {
        let t = sample_term();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, 0.5]);
        let u = t.lmul(&m).unwrap();
        let sum = t.add(&u).unwrap();
        for xi in [0.1, 0.9, 2.5] {
            let f = t.eval(xi);
            assert_relative_eq!(u.eval(xi), &m * &f, epsilon = 1e-13);
            assert_relative_eq!(sum.eval(xi), &f + &m * &f, epsilon = 1e-13);
        }
    }

    #[test]
    fn forward_convolution_matches_quadrature() {
        let t = sample_term();
        let s = DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.9]);
        let g = t.conv_forward(&s).unwrap();
        for xi in [0.4, 1.3, 3.1] {
            for row in 0..2 {
                let oracle = integrate(8, 0.0, xi, &|sig: f64| {
                    let kernel = expm(&(-&s * (xi - sig)));
                    (kernel * t.eval(sig))[row]
                });
                assert_relative_eq!(g.eval(xi)[row], oracle, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        let t = sample_term();
        let s = DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.9]);
        let g = t.tail_integral(&s).unwrap();
        for xi in [0.0, 0.8, 2.2] {
            for row in 0..2 {
                // Truncation at ξ + 60 is far below 1e−12 for these rates.
                let oracle = composite(xi, xi + 60.0, &|sig: f64| {
                    let kernel = expm(&(-&s * (sig - xi)));
                    (kernel * t.eval(sig))[row]
                });
                assert_relative_eq!(g.eval(xi)[row], oracle, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn tail_mass_matches_quadrature() {
        let t = sample_term();
        let g = t.tail_mass().unwrap();
        for xi in [0.0, 1.1] {
            for row in 0..2 {
                let oracle = composite(xi, xi + 70.0, &|sig: f64| t.eval(sig)[row]);
                assert_relative_eq!(g.eval(xi)[row], oracle, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn total_integral_matches_quadrature() {
        let t = sample_term().xi_mul();
        let mass = t.total_integral().unwrap();
        for row in 0..2 {
            let oracle = composite(0.0, 70.0, &|xi: f64| t.eval(xi)[row]);
            assert_relative_eq!(mass[row], oracle, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_hurwitz_exponent_rejected() {
        let c = DMatrix::identity(1, 1);
        let k = DMatrix::from_element(1, 1, 0.0);
        assert!(LayerTerm::new(c, k, DVector::from_element(1, 1.0)).is_err());
    }
}
