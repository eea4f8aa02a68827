//! One-step integrators for linear time-varying systems.
//!
//! The boundary-value solver propagates states with an order-6 Magnus
//! method: the transition matrix over a step is the exponential of a
//! truncated Magnus series built from three Gauss–Legendre samples of the
//! coefficient matrix. For constant coefficients the transition is the
//! exact matrix exponential, which is the common case here. Step control
//! is by comparing one step against two half steps.
//!
//! A classical adaptive Dormand–Prince 5(4) integrator is kept as a
//! structurally independent oracle for defect diagnostics and tests.

use nalgebra::{DMatrix, DVector};

use crate::linalg::expm;

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Single order-6 Magnus step for `y' = M(t) y` over `[t0, t0 + h]`.
///
/// Uses the three-point Gauss–Legendre collocation of Blanes, Casas, Oteo
/// and Ros; exact (up to the exponential) when `M` is constant.
pub fn magnus6_step<F>(m: &F, t0: f64, h: f64) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let root15 = 15f64.sqrt();
    let c = [0.5 - root15 / 10.0, 0.5, 0.5 + root15 / 10.0];
    let a1 = m(t0 + c[0] * h) * h;
    let a2 = m(t0 + c[1] * h) * h;
    let a3 = m(t0 + c[2] * h) * h;

    let alpha1 = a2.clone();
    let alpha2 = (&a3 - &a1) * (root15 / 3.0);
    let alpha3 = (&a3 - &a2 * 2.0 + &a1) * (10.0 / 3.0);

    let c1 = commutator(&alpha1, &alpha2);
    let c2 = commutator(&alpha1, &(&alpha3 * 2.0 + &c1)) * (-1.0 / 60.0);
    let omega = &alpha1
        + &alpha3 / 12.0
        + commutator(&(&alpha1 * -20.0 - &alpha3 + &c2), &(&alpha2 + &c1)) / 240.0;
    expm(&omega)
}

/// Transition matrix of `y' = M(t) y` over `[t0, t1]` to tolerance `tol`,
/// by adaptive bisection of Magnus steps.
pub fn transition<F>(m: &F, t0: f64, t1: f64, tol: f64) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    transition_rec(m, t0, t1 - t0, tol, 0)
}

fn transition_rec<F>(m: &F, t0: f64, h: f64, tol: f64, depth: usize) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let coarse = magnus6_step(m, t0, h);
    let left = magnus6_step(m, t0, 0.5 * h);
    let right = magnus6_step(m, t0 + 0.5 * h, 0.5 * h);
    let fine = &right * &left;
    let err = (&fine - &coarse).amax();
    if err <= tol * (1.0 + fine.amax()) || depth >= 40 {
        fine
    } else {
        let a = transition_rec(m, t0, 0.5 * h, tol, depth + 1);
        let b = transition_rec(m, t0 + 0.5 * h, 0.5 * h, tol, depth + 1);
        b * a
    }
}

/// Transition matrix and inhomogeneous increment for `y' = M(t) y + q(t)`:
/// returns `(Φ, g)` with `y(t1) = Φ y(t0) + g`, computed on the augmented
/// homogeneous system `[[M, q], [0, 0]]`.
pub fn transition_affine<F, G>(m: &F, q: &G, dim: usize, t0: f64, t1: f64, tol: f64) -> (DMatrix<f64>, DVector<f64>)
where
    F: Fn(f64) -> DMatrix<f64>,
    G: Fn(f64) -> DVector<f64>,
{
    let aug = |t: f64| {
        let mut a = DMatrix::zeros(dim + 1, dim + 1);
        a.view_mut((0, 0), (dim, dim)).copy_from(&m(t));
        a.view_mut((0, dim), (dim, 1)).copy_from(&q(t));
        a
    };
    let phi_aug = transition(&aug, t0, t1, tol);
    let phi = phi_aug.view((0, 0), (dim, dim)).into_owned();
    let g = phi_aug.column(dim).rows(0, dim).into_owned();
    (phi, g)
}

/// Dormand–Prince 5(4) adaptive integration of `y' = f(t, y)` from `t0`
/// to `t1` (either direction). Returns `y(t1)`.
pub fn integrate_dp45<F>(f: &F, t0: f64, y0: &DVector<f64>, t1: f64, rtol: f64, atol: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    // Butcher tableau of DOPRI5.
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let dir = (t1 - t0).signum();
    if dir == 0.0 {
        return y0.clone();
    }
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = dir * (0.05 * (t1 - t0).abs()).max(1e-12);
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(y.len()); 7];

    while (t1 - t) * dir > 1e-14 * (1.0 + t1.abs()) {
        if ((t + h) - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for i in 0..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    yi += kj * (A[i][j] * h);
                }
            }
            k[i] = f(t + C[i] * h, &yi);
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for i in 0..7 {
            if B5[i] != 0.0 {
                y5 += &k[i] * (B5[i] * h);
            }
            err += &k[i] * ((B5[i] - B4[i]) * h);
        }
        let scale = atol + rtol * y5.amax().max(y.amax());
        let errn = err.amax() / scale;
        if errn <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = (0.9 * errn.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h.abs() < 1e-15 * (1.0 + t.abs()) {
            // Step underflow: accept and bail rather than spin forever.
            break;
        }
    }
    y
}
