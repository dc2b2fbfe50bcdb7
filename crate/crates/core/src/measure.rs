//! Finite-`h` interfacial measures: pair correlations across the interface,
//! the perimeter proxy `E_h / c0`, and the dissipation density.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::field::{dft, GridSpec, IndicatorField, ScalarField};
use crate::kernel::HeatMultiplier;
use crate::quad::trapezoid;
use crate::C0;

/// Which side of the interface is sampled at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `u(x) (1-u)(x - √h z)`
    InsideOut,
    /// `(1-u)(x) u(x - √h z)`
    OutsideIn,
}

/// Tensor trapezoid rule on `[-extent, extent]^d` in `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZQuadrature {
    pub extent: f64,
    pub points: usize,
}

impl Default for ZQuadrature {
    fn default() -> Self {
        ZQuadrature {
            extent: 6.0,
            points: 160,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMeasureSample {
    pub weight: String,
    pub test: String,
    pub orientation: Orientation,
    pub h: f64,
    pub value: f64,
}

/// `∫∫ ζ(x) f(z) G_1(z) h^{-1/2} A(x) B(x - √h z) dx dz` with `(A, B)`
/// given by `orientation`.
///
/// The inner `x` integral is the correlation
/// `C(a) = ∫ A(x) B(x - a) dx = Σ_k conj(Â(k)) B̂(k) exp(-i k·a)`, summed
/// at all quadrature shifts `a = √h z` one axis at a time.
pub fn pair_measure(
    u: &ScalarField,
    h: f64,
    f: impl Fn([f64; 3]) -> f64,
    zeta: &ScalarField,
    quad: ZQuadrature,
    orientation: Orientation,
) -> Result<f64> {
    u.grid().ensure_same(&zeta.grid())?;
    u.check_unit_range()?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h} must be > 0")));
    }
    if quad.extent < 6.0 || quad.points < 100 {
        return Err(Error::InvalidParameter(format!(
            "z quadrature needs extent >= 6 and >= 100 points, got {} and {}",
            quad.extent, quad.points
        )));
    }
    let grid = u.grid();
    let v = u.complement();
    let (a, b) = match orientation {
        Orientation::InsideOut => (u, &v),
        Orientation::OutsideIn => (&v, u),
    };
    let a_hat = dft(&a.zip_map(zeta, |p, q| p * q)?);
    let b_hat = dft(b);
    let cross: Vec<Complex64> = a_hat
        .coeffs()
        .iter()
        .zip(b_hat.coeffs())
        .map(|(p, q)| p.conj() * q)
        .collect();

    let rule = trapezoid(quad.points, quad.extent);
    let sh = h.sqrt();
    let n = grid.n();
    let dim = grid.dim();
    // phases[p][j] = exp(-i k_j √h z_p) for axis mode index j.
    let phases: Vec<Vec<Complex64>> = rule
        .iter()
        .map(|&(z, _)| {
            (0..n)
                .map(|j| {
                    let k = 2.0 * std::f64::consts::PI * grid.mode(j) as f64;
                    Complex64::from_polar(1.0, -k * sh * z)
                })
                .collect()
        })
        .collect();
    let corr = contract(&cross, n, dim, &phases);

    let p = quad.points;
    let gauss = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    for c in corr.iter() {
        let mut z = [0.0; 3];
        let mut w = 1.0;
        for ax in 0..dim {
            let (zi, wi) = rule[idx[ax]];
            z[ax] = zi;
            w *= wi * gauss(zi);
        }
        total += w * f(z) * c.re;
        // Row-major odometer, last axis fastest.
        for ax in (0..dim).rev() {
            idx[ax] += 1;
            if idx[ax] < p {
                break;
            }
            idx[ax] = 0;
        }
    }
    Ok(total / sh)
}

/// `C[p_0, .., p_{d-1}] = Σ_j S[j] Π_a phases[p_a][j_a]`, contracted one
/// axis at a time (last axis first).
fn contract(s: &[Complex64], n: usize, dim: usize, phases: &[Vec<Complex64>]) -> Vec<Complex64> {
    let p = phases.len();
    // Layout: `outer` leading (uncontracted) indices of size n each,
    // followed by `done` trailing contracted indices of size p each.
    let mut data = s.to_vec();
    let mut done = 0usize;
    for axis in (0..dim).rev() {
        let outer = n.pow(axis as u32);
        let tail = p.pow(done as u32);
        let mut next = vec![Complex64::new(0.0, 0.0); outer * p * tail];
        for o in 0..outer {
            for j in 0..n {
                let src = &data[(o * n + j) * tail..(o * n + j + 1) * tail];
                for (q, ph) in phases.iter().enumerate() {
                    let w = ph[j];
                    let dst = &mut next[(o * p + q) * tail..(o * p + q + 1) * tail];
                    for (d, sv) in dst.iter_mut().zip(src) {
                        *d += w * sv;
                    }
                }
            }
        }
        data = next;
        done += 1;
    }
    data
}

/// `E_h(u) / c0`, the perimeter seen by the kernel.
pub fn perimeter_estimate(u: &ScalarField, h: f64) -> Result<f64> {
    Ok(energy(u, h)? / C0)
}

#[derive(Debug, Clone)]
pub struct DissipationDensity {
    /// `(h√h)^{-1} |G_{h/2} * (χ - χ')|²`
    pub density: ScalarField,
    /// `∫ density dx = (1/2h²) d_h²(χ, χ')`: dissipation per unit time.
    pub integral: f64,
}

pub fn dissipation_density(
    chi: &IndicatorField,
    chi_prev: &IndicatorField,
    h: f64,
) -> Result<DissipationDensity> {
    chi.grid().ensure_same(&chi_prev.grid())?;
    let half = HeatMultiplier::new(chi.grid(), 0.5 * h)?;
    let diff = chi.to_field().zip_map(&chi_prev.to_field(), |a, b| a - b)?;
    let smoothed = half.convolve_raw(&diff);
    let scale = 1.0 / (h * h.sqrt());
    let density = smoothed.map(|v| scale * v * v);
    let integral = density.integrate();
    Ok(DissipationDensity { density, integral })
}

/// `c0 ∮ V² ds` for a circle of radius `r` moving by `V = -1/(2r)`.
pub fn circle_dissipation_rate(r: f64) -> f64 {
    C0 * std::f64::consts::PI / (2.0 * r)
}

/// Fraction of `density`'s mass within distance `width` (torus metric) of
/// the cells where `chi` changes value between neighbours.
pub fn mass_near_interface(density: &ScalarField, chi: &IndicatorField, width: f64) -> Result<f64> {
    let grid = chi.grid();
    grid.ensure_same(&density.grid())?;
    let interface = interface_cells(chi);
    let dist = distance_to_cells(grid, &interface);
    let total: f64 = density.values().iter().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let near: f64 = density
        .values()
        .iter()
        .zip(&dist)
        .filter(|(_, &d)| d <= width)
        .map(|(v, _)| v)
        .sum();
    Ok(near / total)
}

fn interface_cells(chi: &IndicatorField) -> Vec<bool> {
    let grid = chi.grid();
    let n = grid.n() as isize;
    (0..grid.len())
        .map(|i| {
            let mi = grid.multi_index(i);
            (0..grid.dim()).any(|a| {
                [-1isize, 1].iter().any(|&step| {
                    let mut mj = mi;
                    mj[a] = ((mi[a] as isize + step).rem_euclid(n)) as usize;
                    chi.get(grid.flat_index(mj)) != chi.get(i)
                })
            })
        })
        .collect()
}

/// Exact Euclidean distance (torus metric) from each cell center to the
/// nearest marked cell center, by brute force over the marked set.
fn distance_to_cells(grid: GridSpec, marked: &[bool]) -> Vec<f64> {
    let dim = grid.dim();
    let centers: Vec<[f64; 3]> = (0..grid.len())
        .filter(|&i| marked[i])
        .map(|i| grid.center(i))
        .collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            centers
                .iter()
                .map(|c| crate::shape::torus_displacement(x, *c, dim))
                .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
