//! One-dimensional quadrature rules.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[a, b]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(points: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(points > 0);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = vec![(0.0, 0.0); points];
    let m = points.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (points as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..points {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = points as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out[i] = (mid - half * z, half * w);
        out[points - 1 - i] = (mid + half * z, half * w);
    }
    out
}

/// Uniform trapezoid nodes on `[-extent, extent]` (endpoints included).
pub fn trapezoid(points: usize, extent: f64) -> Vec<(f64, f64)> {
    assert!(points >= 2);
    let step = 2.0 * extent / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let w = if i == 0 || i == points - 1 { 0.5 * step } else { step };
            (-extent + i as f64 * step, w)
        })
        .collect()
}

/// Trapezoid rule for samples at (possibly non-uniform) abscissae.
pub fn trapezoid_samples(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
