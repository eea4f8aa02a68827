//! Gauss–Legendre quadrature.
//!
//! Nodes and weights on [−1, 1] are computed by Newton iteration on the
//! Legendre polynomial (Golub–Welsch is overkill at these orders), then
//! mapped to arbitrary intervals. Composite rules over a mesh are used for
//! every cost integral in the crate.

/// Gauss–Legendre nodes and weights of order `n` on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with a single Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(order: usize, a: f64, b: f64, mut f: F) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Gauss–Legendre rule over the intervals of `mesh`.
pub fn integrate_mesh<F: FnMut(f64) -> f64>(order: usize, mesh: &[f64], mut f: F) -> f64 {
    mesh.windows(2)
        .map(|w| integrate(order, w[0], w[1], &mut f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_for_low_degree_polynomials() {
        // Order-n Gauss is exact through degree 2n−1.
        let val = integrate(6, 0.0, 2.0, |t| t.powi(11));
        assert_relative_eq!(val, 2.0f64.powi(12) / 12.0, max_relative = 1e-13);
    }

    #[test]
    fn composite_converges_on_exponential() {
        let mesh: Vec<f64> = (0..=16).map(|k| k as f64 / 8.0).collect();
        let val = integrate_mesh(8, &mesh, |t| (-t).exp());
        assert_relative_eq!(val, 1.0 - (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let (_, ws) = gauss_legendre(7);
        assert_relative_eq!(ws.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }
}
