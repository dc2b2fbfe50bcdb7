//! First variations of `E_h` and `d_h` along the flow of a smooth vector
//! field `ξ`, i.e. along `∂_s u + ξ·∇u = 0`.
//!
//! With `v = 1 - u`:
//!
//! ```text
//! δE_h(u).ξ     = h^{-1/2} ∫ ∇·ξ (v G*u + u G*v) + u Σ_i (ξ_i ∂_i G*v - ∂_i G*(ξ_i v))
//! ½(δd_h.ξ)²    = √h ∫ u ξ·∇²G*(vξ) - u ξ·∇G*(v ∇·ξ) + u ∇·ξ ∇·G*(vξ) - u ∇·ξ G*(v ∇·ξ)
//! ```
//!
//! Integrating by parts, the second line equals `√h ∫ p G_h*p` with
//! `p = ∇·(uξ) - u ∇·ξ`, which is how [`slope_lower`] assembles its Gram
//! matrix: one spectrum per basis field instead of one evaluation per pair.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dft, idft, GridSpec, ScalarField, Spectrum};
use crate::kernel::{HeatMultiplier, RANGE_CLAMP};
use crate::shape::ShapeSpec;
use crate::C0;

/// Largest `|s| · max|ξ|` accepted by [`transport`].
pub const MAX_DISPLACEMENT: f64 = 0.25;
/// Order cap of the Taylor evaluation of the trigonometric interpolant.
pub const TAYLOR_ORDER_CAP: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Cos,
    Sin,
}

/// Smooth periodic vector fields with closed-form divergence and Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    Constant { value: [f64; 3] },
    /// `scale · (x - center)` with each component wrapped to `[-½, ½)`.
    /// Smooth away from the antipodal planes of `center`; derivatives are
    /// those of the smooth part.
    Dilation { center: [f64; 3], scale: f64 },
    /// `amplitude · trig(2π m·x) e_axis`.
    Mode {
        m: [i64; 3],
        trig: Trig,
        axis: usize,
        amplitude: f64,
    },
    Sum { terms: Vec<VectorField> },
}

fn wrap(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

impl VectorField {
    pub fn constant(value: [f64; 3]) -> Self {
        VectorField::Constant { value }
    }

    pub fn dilation(center: [f64; 3]) -> Self {
        VectorField::Dilation { center, scale: 1.0 }
    }

    pub fn mode(m: [i64; 3], trig: Trig, axis: usize) -> Self {
        VectorField::Mode {
            m,
            trig,
            axis,
            amplitude: 1.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            VectorField::Constant { value } => VectorField::Constant {
                value: value.map(|v| c * v),
            },
            VectorField::Dilation { center, scale } => VectorField::Dilation {
                center: *center,
                scale: c * scale,
            },
            VectorField::Mode {
                m,
                trig,
                axis,
                amplitude,
            } => VectorField::Mode {
                m: *m,
                trig: *trig,
                axis: *axis,
                amplitude: c * amplitude,
            },
            VectorField::Sum { terms } => VectorField::Sum {
                terms: terms.iter().map(|t| t.scaled(c)).collect(),
            },
        }
    }

    fn phase(m: &[i64; 3], x: [f64; 3]) -> f64 {
        2.0 * PI * (0..3).map(|a| m[a] as f64 * x[a]).sum::<f64>()
    }

    pub fn eval(&self, x: [f64; 3], dim: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        match self {
            VectorField::Constant { value } => out[..dim].copy_from_slice(&value[..dim]),
            VectorField::Dilation { center, scale } => {
                for a in 0..dim {
                    out[a] = scale * wrap(x[a] - center[a]);
                }
            }
            VectorField::Mode {
                m,
                trig,
                axis,
                amplitude,
            } => {
                let p = Self::phase(m, x);
                out[*axis] = amplitude
                    * match trig {
                        Trig::Cos => p.cos(),
                        Trig::Sin => p.sin(),
                    };
            }
            VectorField::Sum { terms } => {
                for t in terms {
                    let v = t.eval(x, dim);
                    for a in 0..dim {
                        out[a] += v[a];
                    }
                }
            }
        }
        out
    }

    /// `J[i][j] = ∂_j ξ_i`.
    pub fn jacobian(&self, x: [f64; 3], dim: usize) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        match self {
            VectorField::Constant { .. } => {}
            VectorField::Dilation { scale, .. } => {
                for a in 0..dim {
                    out[a][a] = *scale;
                }
            }
            VectorField::Mode {
                m,
                trig,
                axis,
                amplitude,
            } => {
                let p = Self::phase(m, x);
                let d = match trig {
                    Trig::Cos => -p.sin(),
                    Trig::Sin => p.cos(),
                };
                for j in 0..dim {
                    out[*axis][j] = amplitude * 2.0 * PI * m[j] as f64 * d;
                }
            }
            VectorField::Sum { terms } => {
                for t in terms {
                    let jt = t.jacobian(x, dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            out[i][j] += jt[i][j];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn div(&self, x: [f64; 3], dim: usize) -> f64 {
        let j = self.jacobian(x, dim);
        (0..dim).map(|a| j[a][a]).sum()
    }

    /// Upper bound on `max_x |ξ(x)|`.
    pub fn max_norm_bound(&self, dim: usize) -> f64 {
        match self {
            VectorField::Constant { value } => value[..dim].iter().map(|v| v * v).sum::<f64>().sqrt(),
            VectorField::Dilation { scale, .. } => scale.abs() * 0.5 * (dim as f64).sqrt(),
            VectorField::Mode { amplitude, .. } => amplitude.abs(),
            VectorField::Sum { terms } => terms.iter().map(|t| t.max_norm_bound(dim)).sum(),
        }
    }

    /// Constant part if the field is constant.
    fn as_constant(&self, dim: usize) -> Option<[f64; 3]> {
        match self {
            VectorField::Constant { value } => Some(*value),
            VectorField::Mode {
                m,
                trig: Trig::Cos,
                axis,
                amplitude,
            } if m[..dim].iter().all(|&v| v == 0) => {
                let mut v = [0.0; 3];
                v[*axis] = *amplitude;
                Some(v)
            }
            VectorField::Sum { terms } => {
                let mut acc = [0.0; 3];
                for t in terms {
                    let v = t.as_constant(dim)?;
                    for a in 0..3 {
                        acc[a] += v[a];
                    }
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Grid samples of the components (`None` where identically zero) and
    /// of the divergence.
    pub fn sample(&self, grid: GridSpec) -> SampledVectorField {
        let dim = grid.dim();
        let len = grid.len();
        let mut used = [false; 3];
        self.mark_components(&mut used);
        let mut comps: Vec<Vec<f64>> = (0..dim).map(|_| Vec::new()).collect();
        for (a, c) in comps.iter_mut().enumerate() {
            if used[a] {
                c.reserve(len);
            }
        }
        let mut div = Vec::with_capacity(len);
        for i in 0..len {
            let x = grid.center(i);
            let v = self.eval(x, dim);
            for a in 0..dim {
                if used[a] {
                    comps[a].push(v[a]);
                }
            }
            div.push(self.div(x, dim));
        }
        SampledVectorField {
            components: comps
                .into_iter()
                .enumerate()
                .map(|(a, c)| used[a].then(|| ScalarField::from_vec_unchecked(grid, c)))
                .collect(),
            div: ScalarField::from_vec_unchecked(grid, div),
        }
    }

    fn mark_components(&self, used: &mut [bool; 3]) {
        match self {
            VectorField::Constant { value } => {
                for a in 0..3 {
                    used[a] |= value[a] != 0.0;
                }
            }
            VectorField::Dilation { .. } => *used = [true; 3],
            VectorField::Mode { axis, .. } => used[*axis] = true,
            VectorField::Sum { terms } => terms.iter().for_each(|t| t.mark_components(used)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampledVectorField {
    pub components: Vec<Option<ScalarField>>,
    pub div: ScalarField,
}

/// A finite family of vector fields `ξ_j` with coefficients `c_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldBasis {
    pub fields: Vec<VectorField>,
    pub coefficients: Vec<f64>,
}

impl VectorFieldBasis {
    pub fn new(fields: Vec<VectorField>) -> Self {
        let coefficients = vec![0.0; fields.len()];
        VectorFieldBasis {
            fields,
            coefficients,
        }
    }

    /// `cos(2π m·x) e_i` and `sin(2π m·x) e_i` for `|m|_∞ ≤ k`, one
    /// representative per pair `±m` and no identically-zero sines.
    pub fn trigonometric(dim: usize, k: i64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if k < 0 {
            return Err(Error::InvalidParameter(format!("basis cutoff K = {k} must be >= 0")));
        }
        let mut modes = Vec::new();
        let range = |a: usize| if a < dim { -k..=k } else { 0..=0 };
        for m0 in range(0) {
            for m1 in range(1) {
                for m2 in range(2) {
                    let m = [m0, m1, m2];
                    // Keep m with first nonzero component positive.
                    let first = m.iter().find(|&&v| v != 0).copied().unwrap_or(0);
                    if first >= 0 {
                        modes.push(m);
                    }
                }
            }
        }
        let mut fields = Vec::new();
        for axis in 0..dim {
            for m in &modes {
                fields.push(VectorField::mode(*m, Trig::Cos, axis));
                if m.iter().any(|&v| v != 0) {
                    fields.push(VectorField::mode(*m, Trig::Sin, axis));
                }
            }
        }
        Ok(Self::new(fields))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `Σ_j c_j ξ_j`.
    pub fn combined(&self) -> VectorField {
        VectorField::Sum {
            terms: self
                .fields
                .iter()
                .zip(&self.coefficients)
                .filter(|(_, &c)| c != 0.0)
                .map(|(f, &c)| f.scaled(c))
                .collect(),
        }
    }
}

/// All mixed partial derivatives of total order `p` in `dim` variables.
fn multi_indices(dim: usize, p: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=p {
        for b in 0..=(p - a) {
            let c = p - a - b;
            let idx = [a, b, c];
            if idx[dim..].iter().all(|&v| v == 0) {
                out.push(idx);
            }
        }
    }
    out
}

/// Evaluates the trigonometric interpolant of `u` at `x_j + offsets_j` by
/// a Taylor series around each cell center.
fn evaluate_shifted(u: &ScalarField, offsets: &[[f64; 3]]) -> Result<ScalarField> {
    let grid = u.grid();
    let dim = grid.dim();
    let spec = dft(u);
    let lattice = grid.lattice();
    let scale = u.max_abs().max(1e-300);
    let mut out = u.values().to_vec();
    let mut factorial = [1.0f64; 3];
    let mut small_orders = 0;
    for p in 1..=TAYLOR_ORDER_CAP {
        let mut largest = 0.0f64;
        for alpha in multi_indices(dim, p) {
            let deriv = idft(&spec.apply(|i, c| {
                let mut f = c;
                for a in 0..dim {
                    for _ in 0..alpha[a] {
                        f *= lattice.derivative_factor(i, a);
                    }
                }
                f
            }));
            for a in 0..dim {
                factorial[a] = (1..=alpha[a]).map(|v| v as f64).product();
            }
            let denom: f64 = factorial[..dim].iter().product();
            for (j, o) in out.iter_mut().enumerate() {
                let mut mono = 1.0;
                for a in 0..dim {
                    mono *= offsets[j][a].powi(alpha[a] as i32);
                }
                let term = deriv.values()[j] * mono / denom;
                largest = largest.max(term.abs());
                *o += term;
            }
        }
        if largest <= 1e-17 * scale {
            small_orders += 1;
            if small_orders >= 2 {
                return ScalarField::new(grid, out);
            }
        } else {
            small_orders = 0;
        }
    }
    Err(Error::NotConverged(format!(
        "Taylor evaluation of the interpolant did not converge by order {TAYLOR_ORDER_CAP}"
    )))
}

/// `u_s(x) = u(Φ_{-s}(x))` where `Φ` is the flow of `ξ`: the solution of
/// `∂_s u + ξ·∇u = 0` at time `s`.
///
/// The backward characteristic is integrated with two midpoint steps and
/// `u` is evaluated through its trigonometric interpolant. Constant `ξ` is
/// an exact Fourier phase shift. For `[0,1]`-valued `u`, round-off within
/// [`RANGE_CLAMP`] of the interval is snapped back; larger excursions
/// (interpolation overshoot of rough fields) are returned as computed.
pub fn transport(u: &ScalarField, xi: &VectorField, s: f64) -> Result<ScalarField> {
    let out = transport_unclamped(u, xi, s)?;
    if !u.is_unit_range() {
        return Ok(out);
    }
    Ok(out.map(|v| {
        if (-RANGE_CLAMP..0.0).contains(&v) {
            0.0
        } else if v > 1.0 && v <= 1.0 + RANGE_CLAMP {
            1.0
        } else {
            v
        }
    }))
}

fn transport_unclamped(u: &ScalarField, xi: &VectorField, s: f64) -> Result<ScalarField> {
    let grid = u.grid();
    let dim = grid.dim();
    let reach = s.abs() * xi.max_norm_bound(dim);
    if reach > MAX_DISPLACEMENT {
        return Err(Error::StepTooLarge(reach));
    }
    if s == 0.0 || reach == 0.0 {
        return Ok(u.clone());
    }
    if let Some(v) = xi.as_constant(dim) {
        let lattice = grid.lattice();
        let shifted = dft(u).apply(|i, c| {
            let m = lattice.modes()[i];
            let phase: f64 = (0..dim).map(|a| 2.0 * PI * m[a] as f64 * s * v[a]).sum();
            c * Complex64::from_polar(1.0, -phase)
        });
        return Ok(idft(&shifted));
    }
    let half = 0.5 * s;
    let offsets: Vec<[f64; 3]> = (0..grid.len())
        .map(|j| {
            let x = grid.center(j);
            let mut y = x;
            for _ in 0..2 {
                let k1 = xi.eval(y, dim);
                let mut mid = y;
                for a in 0..dim {
                    mid[a] -= 0.5 * half * k1[a];
                }
                let k2 = xi.eval(mid, dim);
                for a in 0..dim {
                    y[a] -= half * k2[a];
                }
            }
            let mut o = [0.0; 3];
            for a in 0..dim {
                o[a] = y[a] - x[a];
            }
            o
        })
        .collect();
    evaluate_shifted(u, &offsets)
}

/// Convolution pieces of `u` shared by first-variation formulas.
struct Smoothed {
    /// `G*u`
    gu: ScalarField,
    /// `∂_i G*u`
    grad_gu: Vec<ScalarField>,
}

impl Smoothed {
    fn new(kernel: &HeatMultiplier, u: &ScalarField) -> Self {
        let spec = dft(u);
        let gu = idft(&kernel.apply_spectrum(&spec));
        let grad_gu = (0..u.grid().dim())
            .map(|a| kernel.gradient_spectrum(&spec, a))
            .collect();
        Smoothed { gu, grad_gu }
    }
}

fn check_phase_field(u: &ScalarField, h: f64) -> Result<HeatMultiplier> {
    u.check_unit_range()?;
    HeatMultiplier::new(u.grid(), h)
}

/// `δE_h(u).ξ`, literal form.
pub fn delta_energy(u: &ScalarField, h: f64, xi: &VectorField) -> Result<f64> {
    let kernel = check_phase_field(u, h)?;
    let grid = u.grid();
    let dim = grid.dim();
    let sampled = xi.sample(grid);
    let sm = Smoothed::new(&kernel, u);
    let uv = u.values();
    let dv = grid.cell_volume();

    let mut total = 0.0;
    for j in 0..grid.len() {
        let (uj, gu) = (uv[j], sm.gu.values()[j]);
        let vj = 1.0 - uj;
        total += sampled.div.values()[j] * (vj * gu + uj * (1.0 - gu));
    }
    // Commutator: ξ_i ∂_i G*v - ∂_i G*(ξ_i v), with ∂_i G*v = -∂_i G*u.
    for a in 0..dim {
        let Some(xa) = &sampled.components[a] else {
            continue;
        };
        let xv = xa.zip_map(&u.complement(), |x, v| x * v)?;
        let conv = kernel.gradient(&xv, a);
        for j in 0..grid.len() {
            total += uv[j] * (-xa.values()[j] * sm.grad_gu[a].values()[j] - conv.values()[j]);
        }
    }
    Ok(total * dv / h.sqrt())
}

/// `½ (δd_h(u,·)(u).ξ)²`, literal four-term form.
pub fn delta_metric_sq(u: &ScalarField, h: f64, xi: &VectorField) -> Result<f64> {
    let kernel = check_phase_field(u, h)?;
    let grid = u.grid();
    let dim = grid.dim();
    let sampled = xi.sample(grid);
    let v = u.complement();
    let uv = u.values();
    let div = sampled.div.values();
    let zero = ScalarField::constant(grid, 0.0);
    let comp = |a: usize| sampled.components[a].as_ref().unwrap_or(&zero);

    // Spectra of v ξ_j and of v ∇·ξ.
    let vxi: Vec<Spectrum> = (0..dim)
        .map(|a| Ok(dft(&v.zip_map(comp(a), |p, q| p * q)?)))
        .collect::<Result<_>>()?;
    let vdiv = dft(&v.zip_map(&sampled.div, |p, q| p * q)?);

    let mut total = 0.0;
    let add = |total: &mut f64, weight: &dyn Fn(usize) -> f64, field: &ScalarField| {
        *total += field
            .values()
            .iter()
            .enumerate()
            .map(|(j, f)| uv[j] * weight(j) * f)
            .sum::<f64>();
    };
    for i in 0..dim {
        for jj in 0..dim {
            let hess = kernel.hessian_spectrum(&vxi[jj], i, jj);
            add(&mut total, &|j| comp(i).values()[j], &hess);
        }
        let g = kernel.gradient_spectrum(&vdiv, i);
        add(&mut total, &|j| -comp(i).values()[j], &g);
        let gv = kernel.gradient_spectrum(&vxi[i], i);
        add(&mut total, &|j| div[j], &gv);
    }
    let gdiv = idft(&kernel.apply_spectrum(&vdiv));
    add(&mut total, &|j| -div[j], &gdiv);
    Ok(total * grid.cell_volume() * h.sqrt())
}

/// Spectrum of `p = ∇·(uξ) - u ∇·ξ`, the rate `-∂_s u_s` at `s = 0`.
fn transport_rate_spectrum(u: &ScalarField, sampled: &SampledVectorField) -> Result<Spectrum> {
    let grid = u.grid();
    let lattice = grid.lattice();
    let mut acc = dft(&u.zip_map(&sampled.div, |a, b| -a * b)?);
    for (axis, comp) in sampled.components.iter().enumerate() {
        if let Some(c) = comp {
            let s = dft(&u.zip_map(c, |a, b| a * b)?);
            for (i, (out, v)) in acc.coeffs_mut().iter_mut().zip(s.coeffs()).enumerate() {
                *out += v * lattice.derivative_factor(i, axis);
            }
        }
    }
    Ok(acc)
}

/// `δE_h(u).ξ` as the linear functional `∫ ξ·W + ∫ (∇·ξ) P` with
/// `W_i = h^{-1/2}(u ∂_i G*(1-u) + (1-u) ∂_i G*u)` and
/// `P = h^{-1/2}((1-u) G*u + u G*(1-u))`.
struct EnergyFunctional {
    w: Vec<ScalarField>,
    p: ScalarField,
}

impl EnergyFunctional {
    fn new(kernel: &HeatMultiplier, u: &ScalarField) -> Self {
        let sm = Smoothed::new(kernel, u);
        let sh = kernel.h().sqrt();
        let uv = u.values();
        let w = sm
            .grad_gu
            .iter()
            .map(|g| {
                let vals = g
                    .values()
                    .iter()
                    .zip(uv)
                    .map(|(gi, ui)| gi * (1.0 - 2.0 * ui) / sh)
                    .collect();
                ScalarField::from_vec_unchecked(u.grid(), vals)
            })
            .collect();
        let p = ScalarField::from_vec_unchecked(
            u.grid(),
            uv.iter()
                .zip(sm.gu.values())
                .map(|(ui, gi)| ((1.0 - ui) * gi + ui * (1.0 - gi)) / sh)
                .collect(),
        );
        EnergyFunctional { w, p }
    }

    fn apply(&self, sampled: &SampledVectorField) -> f64 {
        let grid = self.p.grid();
        let mut total: f64 = sampled
            .div
            .values()
            .iter()
            .zip(self.p.values())
            .map(|(a, b)| a * b)
            .sum();
        for (a, comp) in sampled.components.iter().enumerate() {
            if let Some(c) = comp {
                total += c
                    .values()
                    .iter()
                    .zip(self.w[a].values())
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            }
        }
        total * grid.cell_volume()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeLowerReport {
    /// `√(2 max(0, bᵀc - ½ cᵀQc))`.
    pub value: f64,
    /// `bᵀc - ½ cᵀQc` at the computed coefficients.
    pub objective: f64,
    pub basis_size: usize,
    pub ridge: f64,
    /// Smallest and largest eigenvalues of `Q`.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `δE_h(u).ξ_j`.
    #[serde(skip)]
    pub b: Vec<f64>,
    #[serde(skip)]
    pub coefficients: Vec<f64>,
}

/// Default ridge: `1e-8 · max(trace(Q) / dim, 1)`. The floor keeps the
/// bound finite when `Q` vanishes and `b` is pure round-off (no interface).
pub const RIDGE_FACTOR: f64 = 1e-8;

/// Linear form `b_j = δE_h(u).ξ_j` and Gram matrix `Q_jk` of the quadratic
/// form `½(δd_h.ξ)²` (so `½ cᵀQc = ½(δd_h.Σ c_j ξ_j)²`).
pub fn first_variation_system(
    u: &ScalarField,
    h: f64,
    basis: &VectorFieldBasis,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let kernel = check_phase_field(u, h)?;
    if basis.is_empty() {
        return Err(Error::InvalidParameter("vector field basis is empty".into()));
    }
    let grid = u.grid();
    let functional = EnergyFunctional::new(&kernel, u);
    // Modes whose multiplier underflows carry no weight.
    let keep: Vec<usize> = (0..grid.len())
        .filter(|&i| kernel.values()[i] > 1e-32)
        .collect();
    let dim = basis.len();
    let cols = keep.len();
    let mut re = DMatrix::<f64>::zeros(dim, cols);
    let mut im = DMatrix::<f64>::zeros(dim, cols);
    let mut b = DVector::<f64>::zeros(dim);
    for (j, field) in basis.fields.iter().enumerate() {
        let sampled = field.sample(grid);
        b[j] = functional.apply(&sampled);
        let spec = transport_rate_spectrum(u, &sampled)?;
        for (c, &i) in keep.iter().enumerate() {
            let w = spec.coeffs()[i] * kernel.values()[i].sqrt();
            re[(j, c)] = w.re;
            im[(j, c)] = w.im;
        }
    }
    let scale = 2.0 * h.sqrt();
    let q = (&re * re.transpose() + &im * im.transpose()) * scale;
    Ok((b, q))
}

/// Lower bound for the metric slope `|∂E_h|(u)`:
/// `½|∂E_h|² ≥ max_c (bᵀc - ½ cᵀQc)` over the span of `basis`.
pub fn slope_lower(
    u: &ScalarField,
    h: f64,
    basis: &VectorFieldBasis,
    ridge: Option<f64>,
) -> Result<SlopeLowerReport> {
    let (b, q) = first_variation_system(u, h, basis)?;
    slope_lower_from_system(&b, &q, ridge)
}

pub fn slope_lower_from_system(
    b: &DVector<f64>,
    q: &DMatrix<f64>,
    ridge: Option<f64>,
) -> Result<SlopeLowerReport> {
    let dim = b.len();
    let ridge = ridge.unwrap_or(RIDGE_FACTOR * (q.trace() / dim as f64).max(1.0));
    if !(ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!("ridge {ridge} must be >= 0")));
    }
    let eig = q.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.min();
    let max_eigenvalue = eig.eigenvalues.max();
    let mut reg = q.clone();
    for i in 0..dim {
        reg[(i, i)] += ridge;
    }
    let c = match reg.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => reg.lu().solve(b).ok_or_else(|| {
            Error::SingularSystem(format!("Gram matrix singular with ridge {ridge}"))
        })?,
    };
    let objective = b.dot(&c) - 0.5 * c.dot(&(q * &c));
    Ok(SlopeLowerReport {
        value: (2.0 * objective.max(0.0)).sqrt(),
        objective,
        basis_size: dim,
        ridge,
        min_eigenvalue,
        max_eigenvalue,
        b: b.iter().copied().collect(),
        coefficients: c.iter().copied().collect(),
    })
}

/// Continuum limits of `δE_h.ξ` and `½(δd_h.ξ)²` on a smooth shape:
/// `a = c0 ∫ (∇·ξ - ν·∇ξ ν) dS`, `b = c0 ∫ (ξ·ν)² dS`, by a periodic
/// trapezoid rule with [`COMPARATOR_POINTS`] nodes per boundary direction.
pub fn continuum_comparators(shape: &ShapeSpec, dim: usize, xi: &VectorField) -> Result<(f64, f64)> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut accumulate = |x: [f64; 3], nu: [f64; 3], ds: f64| {
        let j = xi.jacobian(x, dim);
        let v = xi.eval(x, dim);
        let div: f64 = (0..dim).map(|i| j[i][i]).sum();
        let mut njn = 0.0;
        for p in 0..dim {
            for q in 0..dim {
                njn += nu[p] * j[p][q] * nu[q];
            }
        }
        let xn: f64 = (0..dim).map(|p| v[p] * nu[p]).sum();
        a += (div - njn) * ds;
        b += xn * xn * ds;
    };
    let pts = COMPARATOR_POINTS;
    match *shape {
        ShapeSpec::Disc { center, radius } if dim == 2 => {
            let ds = 2.0 * PI * radius / pts as f64;
            for i in 0..pts {
                let th = 2.0 * PI * i as f64 / pts as f64;
                let nu = [th.cos(), th.sin(), 0.0];
                let x = [center[0] + radius * nu[0], center[1] + radius * nu[1], 0.0];
                accumulate(x, nu, ds);
            }
        }
        ShapeSpec::Stripe { width } => {
            // Interfaces {x_1 = 0} (ν = -e_1) and {x_1 = width} (ν = e_1).
            let transverse = if dim == 1 { 1 } else { pts.pow(dim as u32 - 1) };
            let ds = 1.0 / transverse as f64;
            for (x1, sign) in [(0.0, -1.0), (width, 1.0)] {
                for t in 0..transverse {
                    let mut x = [x1, 0.0, 0.0];
                    let mut rest = t;
                    for coord in x.iter_mut().take(dim).skip(1) {
                        *coord = (rest % pts) as f64 / pts as f64;
                        rest /= pts;
                    }
                    accumulate(x, [sign, 0.0, 0.0], ds);
                }
            }
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no boundary parameterization for {shape:?} in d = {dim}"
            )))
        }
    }
    Ok((C0 * a, C0 * b))
}

/// Boundary nodes per direction in [`continuum_comparators`].
pub const COMPARATOR_POINTS: usize = 512;
