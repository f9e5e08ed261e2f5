//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// ∫_a^b f with an n-point rule on each of `pieces` equal panels.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize, pieces: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    0.5 * h * acc
}
