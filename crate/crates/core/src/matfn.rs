//! Matrix-valued functions of time with exact derivatives.
//!
//! Game data are per-entry polynomials in `t` (a constant matrix is the
//! degree-0 case). The state transformation introduces the inverse of the
//! polynomial matrix `R_v(t)`, which is rational, so the working type
//! [`MatrixFunction`] is a polynomial matrix numerator over a scalar
//! polynomial denominator. Products, sums, transposes, inverses (via the
//! adjugate), and first/second derivatives (via the quotient rule) are all
//! exact; nothing is ever finite-differenced.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Scalar polynomial, ascending coefficients: `c[0] + c[1] t + …`.
pub type Poly = Vec<f64>;

/// Evaluate a polynomial by Horner's rule.
pub fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Exact derivative of a polynomial.
pub fn poly_deriv(p: &[f64]) -> Poly {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

fn poly_add(a: &[f64], b: &[f64]) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + b.get(k).copied().unwrap_or(0.0))
        .collect()
}

fn poly_sub(a: &[f64], b: &[f64]) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0))
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_scale(a: &[f64], s: f64) -> Poly {
    a.iter().map(|&c| c * s).collect()
}

fn poly_trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    if p.is_empty() {
        p.push(0.0);
    }
    p
}

fn poly_is_const(p: &[f64]) -> Option<f64> {
    if p.iter().skip(1).all(|&c| c == 0.0) {
        Some(p[0])
    } else {
        None
    }
}

/// Matrix with polynomial entries (row-major entry storage).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    /// Build from per-entry coefficient lists, row-major.
    pub fn new(rows: usize, cols: usize, entries: Vec<Poly>) -> Result<Self> {
        if entries.len() != rows * cols || entries.iter().any(|p| p.is_empty()) {
            return Err(Error::Dimension(format!(
                "PolyMatrix: expected {rows}x{cols} non-empty entries, got {}",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Constant matrix.
    pub fn constant(m: &DMatrix<f64>) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| vec![m[(i, j)]])
            .collect();
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![vec![0.0]; rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        Self::constant(&DMatrix::identity(n, n))
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.cols
    }

    fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    /// Evaluate at time `t`.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| poly_eval(self.entry(i, j), t))
    }

    /// Exact entrywise derivative.
    pub fn deriv(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| poly_deriv(p)).collect(),
        }
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        let entries = (0..self.cols)
            .flat_map(|i| (0..self.rows).map(move |j| (i, j)))
            .map(|(i, j)| self.entry(j, i).clone())
            .collect();
        Self { rows: self.cols, cols: self.rows, entries }
    }

    /// Matrix product with exact polynomial arithmetic.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "PolyMatrix::mul shape mismatch");
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = vec![0.0];
                for k in 0..self.cols {
                    acc = poly_add(&acc, &poly_mul(self.entry(i, k), other.entry(k, j)));
                }
                entries.push(poly_trim(acc));
            }
        }
        Self { rows: self.rows, cols: other.cols, entries }
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.zip(other, poly_add)
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.zip(other, poly_sub)
    }

    fn zip(&self, other: &Self, f: fn(&[f64], &[f64]) -> Poly) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| poly_trim(f(a, b)))
            .collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }

    /// Scale every entry polynomial by the scalar polynomial `p`.
    pub fn scale_poly(&self, p: &[f64]) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| poly_trim(poly_mul(e, p))).collect(),
        }
    }

    /// Scale by a constant.
    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| poly_scale(e, s)).collect(),
        }
    }

    /// Contiguous sub-block of size `nr × nc` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        let entries = (0..nr)
            .flat_map(|i| (0..nc).map(move |j| (i, j)))
            .map(|(i, j)| self.entry(r0 + i, c0 + j).clone())
            .collect();
        Self { rows: nr, cols: nc, entries }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries.push(self.entry(i, j).clone());
            }
            for j in 0..other.cols {
                entries.push(other.entry(i, j).clone());
            }
        }
        Self { rows: self.rows, cols, entries }
    }

    /// Determinant as a polynomial (Laplace expansion; small matrices only).
    pub fn det_poly(&self) -> Poly {
        assert_eq!(self.rows, self.cols, "det of non-square PolyMatrix");
        match self.rows {
            0 => vec![1.0],
            1 => self.entry(0, 0).clone(),
            _ => {
                let mut acc = vec![0.0];
                for j in 0..self.cols {
                    let m = self.minor(0, j).det_poly();
                    let term = poly_mul(self.entry(0, j), &m);
                    acc = if j % 2 == 0 { poly_add(&acc, &term) } else { poly_sub(&acc, &term) };
                }
                poly_trim(acc)
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> Self {
        let entries = (0..self.rows)
            .filter(|&i| i != row)
            .flat_map(|i| (0..self.cols).filter(|&j| j != col).map(move |j| (i, j)))
            .map(|(i, j)| self.entry(i, j).clone())
            .collect();
        Self { rows: self.rows - 1, cols: self.cols - 1, entries }
    }

    /// Adjugate (transpose of the cofactor matrix), exact polynomials.
    pub fn adjugate(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Self::zeros(0, 0);
        }
        if n == 1 {
            return Self::identity(1);
        }
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                // adj(M)[i, j] = (−1)^{i+j} det(minor(j, i))
                let cof = self.minor(j, i).det_poly();
                if (i + j) % 2 == 0 { poly_trim(cof) } else { poly_trim(poly_scale(&cof, -1.0)) }
            })
            .collect();
        Self { rows: n, cols: n, entries }
    }

    /// Largest absolute coefficient, for near-zero tests.
    pub fn max_abs_coeff(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, &c| m.max(c.abs()))
    }
}

/// Rational matrix function: polynomial matrix over a scalar polynomial
/// denominator, with exact evaluation and differentiation.
#[derive(Debug, Clone)]
pub struct MatrixFunction {
    num: PolyMatrix,
    den: Poly,
}

impl MatrixFunction {
    /// Build from a polynomial matrix (denominator 1).
    pub fn from_poly(num: PolyMatrix) -> Self {
        Self { num, den: vec![1.0] }
    }

    /// Build from numerator and scalar denominator.
    pub fn new(num: PolyMatrix, den: Poly) -> Self {
        Self { num, den: poly_trim(den) }.normalized()
    }

    /// Constant matrix function.
    pub fn constant(m: &DMatrix<f64>) -> Self {
        Self::from_poly(PolyMatrix::constant(m))
    }

    /// Zero matrix function.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_poly(PolyMatrix::zeros(rows, cols))
    }

    /// Identity matrix function.
    pub fn identity(n: usize) -> Self {
        Self::from_poly(PolyMatrix::identity(n))
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.num.nrows()
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.num.ncols()
    }

    /// Numerator polynomial matrix.
    pub fn numerator(&self) -> &PolyMatrix {
        &self.num
    }

    /// Scalar denominator polynomial.
    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    /// Fold a constant denominator into the numerator.
    fn normalized(self) -> Self {
        if let Some(c) = poly_is_const(&self.den) {
            if c != 0.0 && c != 1.0 {
                return Self { num: self.num.scale(1.0 / c), den: vec![1.0] };
            }
        }
        self
    }

    /// Evaluate at time `t`.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        self.num.eval(t) / poly_eval(&self.den, t)
    }

    /// Exact first derivative (quotient rule).
    pub fn deriv(&self) -> Self {
        if poly_is_const(&self.den) == Some(1.0) {
            return Self { num: self.num.deriv(), den: vec![1.0] };
        }
        let num = self
            .num
            .deriv()
            .scale_poly(&self.den)
            .sub(&self.num.scale_poly(&poly_deriv(&self.den)));
        Self::new(num, poly_mul(&self.den, &self.den))
    }

    /// Matrix product.
    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.num.mul(&other.num), poly_mul(&self.den, &other.den))
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, PolyMatrix::add)
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, PolyMatrix::sub)
    }

    fn combine(&self, other: &Self, f: fn(&PolyMatrix, &PolyMatrix) -> PolyMatrix) -> Self {
        if self.den == other.den {
            return Self::new(f(&self.num, &other.num), self.den.clone());
        }
        let a = self.num.scale_poly(&other.den);
        let b = other.num.scale_poly(&self.den);
        Self::new(f(&a, &b), poly_mul(&self.den, &other.den))
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        Self { num: self.num.transpose(), den: self.den.clone() }
    }

    /// Scale by a constant.
    pub fn scale(&self, s: f64) -> Self {
        Self { num: self.num.scale(s), den: self.den.clone() }
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Matrix inverse via the adjugate: `(N/d)⁻¹ = d·adj(N)/det(N)`.
    ///
    /// The result is exact as a rational function; it is the caller's job
    /// to only evaluate where `det` does not vanish.
    pub fn inverse(&self) -> Self {
        assert_eq!(self.nrows(), self.ncols(), "inverse of non-square MatrixFunction");
        let adj = self.num.adjugate().scale_poly(&self.den);
        Self::new(adj, self.num.det_poly())
    }

    /// Sub-block.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self { num: self.num.block(r0, c0, nr, nc), den: self.den.clone() }
    }

    /// Horizontal concatenation (requires equal denominators after
    /// cross-scaling).
    pub fn hstack(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::new(self.num.hstack(&other.num), self.den.clone());
        }
        let a = self.num.scale_poly(&other.den);
        let b = other.num.scale_poly(&self.den);
        Self::new(a.hstack(&b), poly_mul(&self.den, &other.den))
    }

    /// True when every numerator coefficient is below `tol` in magnitude
    /// (the function is identically ~0 as a rational function).
    pub fn is_zero(&self, tol: f64) -> bool {
        self.num.max_abs_coeff() <= tol
    }
}
