//! Fixed-order Gauss–Legendre rules.

use std::sync::OnceLock;

/// Nodes and weights of an `order`-point Gauss–Legendre rule on [-1, 1].
///
/// Nodes are the roots of the Legendre polynomial, found by Newton iteration
/// from the Chebyshev-like initial guesses.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_order(z) and its derivative
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = order as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// The 16-point rule used for non-affine field averages.
pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Mean value of `f` over [a, b] with the 16-point rule. Requires a < b.
pub(crate) fn mean_gl16(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (z, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * z);
    }
    0.5 * acc
}
