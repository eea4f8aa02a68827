//! Small dense linear-algebra helpers: Sylvester/Lyapunov solves, the
//! symmetric positive definite square root, and eigenvalue utilities.
//!
//! All matrices here are small (a few rows at most in the intended use),
//! so Kronecker-product formulations and full eigendecompositions are
//! perfectly adequate.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Solve the Sylvester equation `S X − X K = C` for `X`.
///
/// Solvable whenever the spectra of `S` and `K` are disjoint; here it is
/// used with `spec(S) ⊂ (0, ∞)` and `spec(K) ⊂ (−∞, 0)`, for which the
/// solution is the convergent integral `∫₀^∞ e^{−Sτ} C e^{Kτ} dτ`.
pub fn solve_sylvester(s: &DMatrix<f64>, k: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = s.nrows();
    let q = k.nrows();
    if !s.is_square() || !k.is_square() || c.nrows() != p || c.ncols() != q {
        return Err(Error::Dimension(format!(
            "sylvester: S {}x{}, K {}x{}, C {}x{}",
            s.nrows(),
            s.ncols(),
            k.nrows(),
            k.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    // vec(SX) = (I_q ⊗ S) vec(X), vec(XK) = (Kᵀ ⊗ I_p) vec(X).
    let iq = DMatrix::<f64>::identity(q, q);
    let ip = DMatrix::<f64>::identity(p, p);
    let big = iq.kronecker(s) - k.transpose().kronecker(&ip);
    let rhs = DVector::from_column_slice(c.as_slice());
    let lu = big.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Unsolvable("singular Sylvester operator".into()))?;
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// Solve the Lyapunov equation `S P + P S = D`.
///
/// For symmetric positive definite `S` the solution equals the improper
/// layer integral `∫₀^∞ e^{−Sσ} D e^{−Sσ} dσ`, and is symmetric whenever
/// `D` is.
pub fn solve_lyapunov(s: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = solve_sylvester(s, &(-s), d)?;
    // Symmetrize to remove round-off asymmetry.
    Ok((&p + p.transpose()) * 0.5)
}

/// Symmetric positive definite square root and its inverse, via the
/// spectral decomposition.
///
/// Fails unless `M` is symmetric with minimum eigenvalue above
/// `1e−10·(1 + max-norm)`.
pub fn sqrt_spd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::Dimension("sqrt_spd: matrix not square".into()));
    }
    let asym = (m - m.transpose()).amax();
    let scale = 1.0 + m.amax();
    if asym > 1e-10 * scale {
        return Err(Error::Parameter(format!(
            "sqrt_spd: matrix not symmetric (asymmetry {asym:e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min <= 1e-10 * scale {
        return Err(Error::Parameter(format!(
            "sqrt_spd: matrix not positive definite (min eigenvalue {min:e})"
        )));
    }
    let n = m.nrows();
    let mut root = DMatrix::zeros(n, n);
    let mut inv_root = DMatrix::zeros(n, n);
    for j in 0..n {
        let v = eig.eigenvectors.column(j);
        let lam = eig.eigenvalues[j].sqrt();
        root += v * v.transpose() * lam;
        inv_root += v * v.transpose() / lam;
    }
    Ok((root, inv_root))
}

/// Minimum eigenvalue of a (nearly) symmetric matrix.
pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// Largest real part over the (complex) spectrum of `M`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest absolute real part over the spectrum of `M` (stiffness rate).
pub fn max_abs_re_eig(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.abs())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential `e^M` (scaling-and-squaring Padé).
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}
