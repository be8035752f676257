//! Quadrature rules used for ground-truth integrals over the benchmark
//! manifolds.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Midpoint nodes `(j + 1/2)/n` on the unit circle `[0, 1)` with equal
/// weights. Exact for trigonometric polynomials of degree below `n`.
pub fn circle_nodes(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let w = 1.0 / n as f64;
    (0..n).map(move |j| ((j as f64 + 0.5) * w, w))
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ`, uniform in
/// `φ`. Yields `([θ, φ], weight)` with weights summing to `4π`.
pub fn sphere_nodes(n_theta: usize, n_phi: usize) -> Vec<([f64; 2], f64)> {
    let (z, wz) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (zi, wi) in z.iter().zip(&wz) {
        let theta = zi.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            out.push(([theta, (j as f64 + 0.5) * dphi], wi * dphi));
        }
    }
    out
}
