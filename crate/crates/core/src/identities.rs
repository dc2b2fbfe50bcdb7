//! Quadrature checks of the free-space Gaussian identities behind the
//! constant `c0 = 1/√(2π)`:
//!
//! ```text
//! (a)  ∫ G_1(z) (z_1)_+ dz                   = c0
//! (b) -∫ ∇G_1(z)·A z (ν·z)_+ dz              = c0 (ν·Aν + tr A)
//! (c)  ∫ ξ·∇²G_1(z) ξ (ν·z)_+ dz             = c0 (ξ·ν)²
//! (d)  ∫_{ν·z = 0} G_1 dS                    = c0
//! ```
//!
//! The tensor rule lives in an orthonormal frame whose first axis is `ν`,
//! so the kink of `(ν·z)_+` sits on a panel boundary and Gauss–Legendre
//! converges spectrally on both halves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::C0;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityParams {
    pub dim: usize,
    pub matrix: [[f64; 3]; 3],
    pub normal: [f64; 3],
    pub xi: [f64; 3],
}

impl Default for IdentityParams {
    fn default() -> Self {
        let angle: f64 = 0.7;
        IdentityParams {
            dim: 2,
            matrix: [[1.3, -0.4, 0.0], [0.9, 0.2, 0.0], [0.0, 0.0, 0.0]],
            normal: [angle.cos(), angle.sin(), 0.0],
            xi: [0.8, -1.7, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub c0: f64,
    pub value_03: f64,
    pub residual_03: f64,
    pub value_14: f64,
    pub expected_14: f64,
    pub residual_14: f64,
    pub value_21: f64,
    pub expected_21: f64,
    pub residual_21: f64,
    pub value_22: f64,
    pub residual_22: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.residual_03,
            self.residual_14,
            self.residual_21,
            self.residual_22,
        ]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

fn gaussian(z: &[f64]) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    (2.0 * std::f64::consts::PI).powf(-(z.len() as f64) / 2.0) * (-0.5 * r2).exp()
}

/// Orthonormal frame with `frame[0] = ν`.
fn frame(normal: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = vec![normal[..dim].to_vec()];
    for a in 0..dim {
        let mut v = vec![0.0; dim];
        v[a] = 1.0;
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 && basis.len() < dim {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    basis
}

/// Integrates `f(z)` over `{ν·z > 0} ∩ box` in the ν-aligned frame.
fn half_space_integral(
    normal: &[f64],
    dim: usize,
    extent: f64,
    points: usize,
    f: impl Fn(&[f64]) -> f64,
) -> f64 {
    let basis = frame(normal, dim);
    let along = gauss_legendre(points / 2, 0.0, extent);
    let across = gauss_legendre(points, -extent, extent);
    let mut total = 0.0;
    let mut z = vec![0.0; dim];
    let mut coords = vec![0usize; dim - 1];
    loop {
        let mut w_across = 1.0;
        let mut offset = vec![0.0; dim];
        for (j, &c) in coords.iter().enumerate() {
            let (t, w) = across[c];
            w_across *= w;
            for a in 0..dim {
                offset[a] += t * basis[j + 1][a];
            }
        }
        for &(s, w) in &along {
            for a in 0..dim {
                z[a] = offset[a] + s * basis[0][a];
            }
            total += w * w_across * f(&z);
        }
        // Odometer over the transverse coordinates.
        let mut j = 0;
        while j < coords.len() {
            coords[j] += 1;
            if coords[j] < points {
                break;
            }
            coords[j] = 0;
            j += 1;
        }
        if j == coords.len() {
            break;
        }
    }
    total
}

/// Integral of `G_1` over the hyperplane `ν·z = 0`.
fn hyperplane_integral(normal: &[f64], dim: usize, extent: f64, points: usize) -> f64 {
    if dim == 1 {
        return gaussian(&[0.0]);
    }
    let basis = frame(normal, dim);
    let rule = gauss_legendre(points, -extent, extent);
    let mut total = 0.0;
    let mut coords = vec![0usize; dim - 1];
    loop {
        let mut z = vec![0.0; dim];
        let mut w = 1.0;
        for (j, &c) in coords.iter().enumerate() {
            let (t, wt) = rule[c];
            w *= wt;
            for a in 0..dim {
                z[a] += t * basis[j + 1][a];
            }
        }
        total += w * gaussian(&z);
        let mut j = 0;
        while j < coords.len() {
            coords[j] += 1;
            if coords[j] < points {
                break;
            }
            coords[j] = 0;
            j += 1;
        }
        if j == coords.len() {
            break;
        }
    }
    total
}

pub fn gaussian_identity_suite(extent: f64, points: usize) -> Result<IdentityReport> {
    gaussian_identities(&IdentityParams::default(), extent, points)
}

pub fn gaussian_identities(
    params: &IdentityParams,
    extent: f64,
    points: usize,
) -> Result<IdentityReport> {
    let dim = params.dim;
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if extent < 6.0 {
        return Err(Error::InvalidParameter(format!(
            "quadrature extent {extent} must be at least 6 standard deviations"
        )));
    }
    if points < 200 {
        return Err(Error::InvalidParameter(format!(
            "quadrature needs at least 200 points per axis, got {points}"
        )));
    }
    let nu_len = params.normal[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
    if (nu_len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("normal has length {nu_len}")));
    }
    let nu = &params.normal[..dim];
    let a = &params.matrix;
    let xi = &params.xi[..dim];

    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let value_03 = half_space_integral(&e1, dim, extent, points, |z| gaussian(z) * z[0]);

    // -∇G_1 = z G_1, weighted by (ν·z) on the half space ν·z > 0.
    let value_14 = half_space_integral(nu, dim, extent, points, |z| {
        let nz: f64 = nu.iter().zip(z).map(|(n, v)| n * v).sum();
        let mut zaz = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                zaz += z[i] * a[i][j] * z[j];
            }
        }
        zaz * gaussian(z) * nz
    });
    let nu_a_nu: f64 = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| nu[i] * a[i][j] * nu[j])
        .sum();
    let trace: f64 = (0..dim).map(|i| a[i][i]).sum();
    let expected_14 = C0 * (nu_a_nu + trace);

    // ∇²G_1 = (z zᵀ - I) G_1.
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let value_21 = half_space_integral(nu, dim, extent, points, |z| {
        let nz: f64 = nu.iter().zip(z).map(|(n, v)| n * v).sum();
        let xz: f64 = xi.iter().zip(z).map(|(x, v)| x * v).sum();
        (xz * xz - xi2) * gaussian(z) * nz
    });
    let xn: f64 = xi.iter().zip(nu).map(|(x, n)| x * n).sum();
    let expected_21 = C0 * xn * xn;

    let value_22 = hyperplane_integral(nu, dim, extent, points);

    Ok(IdentityReport {
        c0: C0,
        value_03,
        residual_03: value_03 - C0,
        value_14,
        expected_14,
        residual_14: value_14 - expected_14,
        value_21,
        expected_21,
        residual_21: value_21 - expected_21,
        value_22,
        residual_22: value_22 - C0,
    })
}

/// `∫ G_h φ dz - ∫ G_1(z) φ(√h z) dz` in one dimension for a polynomial
/// `φ(z) = Σ c_j z^j`.
pub fn scaling_residual(h: f64, coeffs: &[f64], extent: f64, points: usize) -> f64 {
    let poly = |z: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c);
    let sh = h.sqrt();
    let gh = |z: f64| (-(z * z) / (2.0 * h)).exp() / (2.0 * std::f64::consts::PI * h).sqrt();
    let lhs: f64 = gauss_legendre(points, -extent * sh, extent * sh)
        .iter()
        .map(|&(z, w)| w * gh(z) * poly(z))
        .sum();
    let rhs: f64 = gauss_legendre(points, -extent, extent)
        .iter()
        .map(|&(z, w)| w * gaussian(&[z]) * poly(sh * z))
        .sum();
    lhs - rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_suite_residuals_small() {
        let r = gaussian_identity_suite(8.0, 400).unwrap();
        assert_relative_eq!(r.value_03, 0.3989422804, epsilon = 1e-10);
        assert!(r.max_residual() < 1e-6, "{r:?}");
    }

    #[test]
    fn identity_matrix_gives_three_c0_in_2d() {
        let params = IdentityParams {
            dim: 2,
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]],
            normal: [0.6, 0.8, 0.0],
            xi: [0.6, 0.8, 0.0],
        };
        let r = gaussian_identities(&params, 8.0, 200).unwrap();
        assert_relative_eq!(r.value_14, 3.0 * C0, epsilon = 1e-10);
        // ξ = ν gives c0.
        assert_relative_eq!(r.value_21, C0, epsilon = 1e-10);
    }

    #[test]
    fn three_dimensional_identities() {
        let n = [1.0 / 3f64.sqrt(); 3];
        let params = IdentityParams {
            dim: 3,
            matrix: [[0.5, 0.1, -0.3], [0.0, 1.0, 0.2], [0.4, 0.0, -0.7]],
            normal: n,
            xi: [0.3, -0.2, 1.1],
        };
        let r = gaussian_identities(&params, 8.0, 200).unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
    }

    #[test]
    fn preconditions() {
        assert!(gaussian_identity_suite(5.0, 400).is_err());
        assert!(gaussian_identity_suite(8.0, 100).is_err());
    }

    #[test]
    fn parabolic_scaling_for_low_degree_polynomials() {
        for h in [1e-3, 0.05, 1.0] {
            for degree in 0..=4 {
                let mut c = vec![0.0; degree + 1];
                c[degree] = 1.0;
                c[0] += 0.5;
                assert!(scaling_residual(h, &c, 8.0, 200).abs() < 1e-8);
            }
        }
    }
}
