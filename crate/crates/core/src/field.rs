//! Periodic scalar fields on the unit torus `[0,1)^d`.
//!
//! Fields are sampled at cell centers `(i + 1/2) / n` along every axis and
//! stored in row-major order (axis 0 slowest). Integrals are cell averages.
//!
//! # Fourier normalization
//!
//! [`dft`] returns the Fourier-series coefficients of the lattice data,
//!
//! ```text
//! F(k) = Δx^d Σ_j f_j exp(-i k·(x_j - x_0)),   k = 2π m,  m_a ∈ (-n/2, n/2]
//! ```
//!
//! where `x_0` is the center of cell 0. With this choice Parseval reads
//! `∫ f g dx = Σ_k F(k) conj(G(k))`, the inverse is
//! `f_j = Σ_k F(k) exp(i k·(x_j - x_0))`, and a constant field `c` has the
//! single coefficient `F(0) = c`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic raster on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

/// Builds the grid used by all simulations: `d ∈ {1,2,3}`, `n ≥ 8` a power of two.
pub fn make_grid(dim: usize, n: usize) -> Result<GridSpec> {
    GridSpec::new(dim, n)
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidResolution { n, min: 8 });
        }
        Self::with_min(dim, n, 8)
    }

    /// Small grids of any size from two cells per axis, for
    /// exhaustive-enumeration oracles. Everything else should go through
    /// [`GridSpec::new`].
    pub fn toy(dim: usize, n: usize) -> Result<Self> {
        Self::with_min(dim, n, 2)
    }

    fn with_min(dim: usize, n: usize, min: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < min {
            return Err(Error::InvalidResolution { n, min });
        }
        Ok(GridSpec { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Volume of one cell, `Δx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat index; unused axes are zero.
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, mi: [usize; 3]) -> usize {
        let mut idx = 0;
        for &i in mi.iter().take(self.dim) {
            idx = idx * self.n + i;
        }
        idx
    }

    /// Cell center of a flat index; unused axes are zero.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (mi[a] as f64 + 0.5) / self.n as f64;
        }
        x
    }

    /// Integer frequency `m ∈ (-n/2, n/2]` of a per-axis lattice index.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn is_nyquist(&self, m: i64) -> bool {
        self.n % 2 == 0 && m == self.n as i64 / 2
    }

    /// Flat spectral index of integer frequency `m`, if representable.
    pub fn mode_index(&self, m: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut mi = [0usize; 3];
        for a in 0..self.dim {
            if m[a] < n / 2 - n + 1 || m[a] > n / 2 {
                return None;
            }
            mi[a] = m[a].rem_euclid(n) as usize;
        }
        Some(self.flat_index(mi))
    }

    pub fn lattice(&self) -> FrequencyLattice {
        FrequencyLattice::new(*self)
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Integer frequencies and `|k|²` for every lattice coefficient, in the same
/// flat order as [`Spectrum::coeffs`].
#[derive(Debug, Clone)]
pub struct FrequencyLattice {
    grid: GridSpec,
    modes: Vec<[i64; 3]>,
    k_squared: Vec<f64>,
}

impl FrequencyLattice {
    fn new(grid: GridSpec) -> Self {
        let len = grid.len();
        let mut modes = Vec::with_capacity(len);
        let mut k_squared = Vec::with_capacity(len);
        for idx in 0..len {
            let mi = grid.multi_index(idx);
            let mut m = [0i64; 3];
            let mut k2 = 0.0;
            for a in 0..grid.dim() {
                m[a] = grid.mode(mi[a]);
                let k = 2.0 * PI * m[a] as f64;
                k2 += k * k;
            }
            modes.push(m);
            k_squared.push(k2);
        }
        FrequencyLattice {
            grid,
            modes,
            k_squared,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn modes(&self) -> &[[i64; 3]] {
        &self.modes
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    /// `i k_a` for the spectral derivative along axis `a`, zero at the
    /// Nyquist frequency so that derivatives of real fields stay real.
    pub fn derivative_factor(&self, idx: usize, axis: usize) -> Complex64 {
        let m = self.modes[idx][axis];
        if self.grid.is_nyquist(m) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * m as f64)
        }
    }

    /// Flat index of the coefficient for integer frequency `m`.
    pub fn index_of(&self, m: [i64; 3]) -> Option<usize> {
        self.grid.mode_index(m)
    }
}

/// A real raster on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, values)
    }

    /// Independent uniform `[0,1]` values, deterministic in `seed`.
    pub fn random_unit(grid: GridSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `1 - u`.
    pub fn complement(&self) -> ScalarField {
        self.map(|v| 1.0 - v)
    }

    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Errors unless every value lies in `[0, 1]`.
    pub fn check_unit_range(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|&v| !(0.0..=1.0).contains(&v))
        {
            Some(index) => Err(Error::OutOfRange {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn is_unit_range(&self) -> bool {
        self.check_unit_range().is_ok()
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Cyclic shift by whole cells: `out(x) = self(x - shift Δx)`.
    pub fn roll(&self, shift: [isize; 3]) -> ScalarField {
        let n = self.grid.n() as isize;
        let mut values = vec![0.0; self.values.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            let mi = self.grid.multi_index(idx);
            let mut target = [0usize; 3];
            for a in 0..self.grid.dim() {
                target[a] = (mi[a] as isize + shift[a]).rem_euclid(n) as usize;
            }
            values[self.grid.flat_index(target)] = v;
        }
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// `∫ f dx` over the torus as `Δx^d Σ f_j`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// `∫ f g dx`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    Ok(f.grid.cell_volume() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>())
}

/// `{0,1}`-valued configuration, stored one byte per cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorField {
    grid: GridSpec,
    cells: Vec<u8>,
}

impl IndicatorField {
    pub fn empty(grid: GridSpec) -> Self {
        IndicatorField {
            grid,
            cells: vec![0; grid.len()],
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        IndicatorField {
            grid,
            cells: vec![1; grid.len()],
        }
    }

    pub fn from_bools(grid: GridSpec, cells: impl IntoIterator<Item = bool>) -> Result<Self> {
        let cells: Vec<u8> = cells.into_iter().map(u8::from).collect();
        if cells.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: cells.len(),
            });
        }
        Ok(IndicatorField { grid, cells })
    }

    pub fn from_field(f: &ScalarField) -> Result<Self> {
        let mut cells = Vec::with_capacity(f.values.len());
        for (index, &value) in f.values.iter().enumerate() {
            if value == 0.0 {
                cells.push(0);
            } else if value == 1.0 {
                cells.push(1);
            } else {
                return Err(Error::OutOfRange { index, value });
            }
        }
        Ok(IndicatorField {
            grid: f.grid,
            cells,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn get(&self, idx: usize) -> bool {
        self.cells[idx] != 0
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// `∫ χ dx`.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.cells.iter().map(|&c| c as f64).collect(),
        }
    }

    /// `∫ |χ - χ'| dx`.
    pub fn symmetric_difference(&self, other: &IndicatorField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let flips = self
            .cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| a != b)
            .count();
        Ok(flips as f64 * self.grid.cell_volume())
    }

    /// Pointwise `self ≤ other`.
    pub fn is_subset_of(&self, other: &IndicatorField) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| a <= b)
    }

    pub fn roll(&self, shift: [isize; 3]) -> IndicatorField {
        IndicatorField::from_field(&self.to_field().roll(shift)).expect("roll preserves values")
    }

    /// Total variation of the raster: `Δx^{d-1}` times the number of
    /// axis-aligned faces across which the indicator jumps.
    pub fn raster_perimeter(&self) -> f64 {
        let n = self.grid.n();
        let mut jumps = 0usize;
        for idx in 0..self.grid.len() {
            let mi = self.grid.multi_index(idx);
            for a in 0..self.grid.dim() {
                let mut next = mi;
                next[a] = (mi[a] + 1) % n;
                if self.cells[idx] != self.cells[self.grid.flat_index(next)] {
                    jumps += 1;
                }
            }
        }
        jumps as f64 * self.grid.spacing().powi(self.grid.dim() as i32 - 1)
    }
}

/// Fourier coefficients of a field in the normalization documented at the
/// module level.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `Σ_k w(k) |F(k)|²`, i.e. `∫ f (W * f)` for an even real multiplier `w`.
    pub fn weighted_norm_sq(&self, weights: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(weights)
            .map(|(c, w)| w * c.norm_sqr())
            .sum()
    }

    /// Pointwise product with a multiplier.
    pub fn apply(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| f(i, c))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `∫ f(x) exp(-i k·x) dx` for `k = 2π m`, with `x` the absolute torus
    /// coordinate (not relative to cell 0).
    pub fn fourier_moment(&self, m: [i64; 3]) -> Option<Complex64> {
        let lattice_idx = self.grid.mode_index(m)?;
        let x0 = 0.5 * self.grid.spacing();
        let phase: f64 = (0..self.grid.dim()).map(|a| 2.0 * PI * m[a] as f64 * x0).sum();
        Some(self.coeffs[lattice_idx] * Complex64::from_polar(1.0, -phase))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_nd(grid: GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let total = data.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf: Vec<Complex64> = Vec::new();
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // Gather each block's strided lines into contiguous rows, transform
        // them in one batch, scatter back.
        let block = stride * n;
        buf.resize(block, Complex64::new(0.0, 0.0));
        for start in (0..total).step_by(block) {
            let src = &data[start..start + block];
            for j in 0..n {
                for off in 0..stride {
                    buf[off * n + j] = src[j * stride + off];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            let dst = &mut data[start..start + block];
            for j in 0..n {
                for off in 0..stride {
                    dst[j * stride + off] = buf[off * n + j];
                }
            }
        }
    }
}

/// Forward transform of a real field.
pub fn dft(f: &ScalarField) -> Spectrum {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_nd(f.grid, &mut data, false);
    let scale = 1.0 / f.grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    Spectrum {
        grid: f.grid,
        coeffs: data,
    }
}

/// Inverse transform; the imaginary part (round-off for Hermitian spectra)
/// is discarded.
pub fn idft(s: &Spectrum) -> ScalarField {
    let mut data = s.coeffs.clone();
    transform_nd(s.grid, &mut data, true);
    ScalarField {
        grid: s.grid,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

/// Inverse transform keeping the complex values.
pub fn idft_complex(s: &Spectrum) -> Vec<Complex64> {
    let mut data = s.coeffs.clone();
    transform_nd(s.grid, &mut data, true);
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_construction() {
        let g = make_grid(2, 256).unwrap();
        assert_eq!(g.len(), 65536);
        assert_eq!(g.spacing(), 1.0 / 256.0);
        assert_eq!(make_grid(1, 8).unwrap().len(), 8);
        assert!(matches!(
            make_grid(2, 100),
            Err(Error::InvalidResolution { n: 100, .. })
        ));
        assert!(matches!(make_grid(4, 8), Err(Error::UnsupportedDimension(4))));
        assert!(make_grid(2, 4).is_err());
        assert!(GridSpec::toy(2, 4).is_ok());
        assert!(GridSpec::toy(2, 3).is_ok());
        assert!(GridSpec::toy(1, 1).is_err());
    }

    #[test]
    fn odd_toy_grid_spectra() {
        let g = GridSpec::toy(2, 3).unwrap();
        let modes: Vec<i64> = (0..3).map(|j| g.mode(j)).collect();
        assert_eq!(modes, vec![0, 1, -1]);
        assert!(!g.is_nyquist(1));
        assert_eq!(g.mode_index([-1, 1, 0]), Some(g.flat_index([2, 1, 0])));
        assert_eq!(g.mode_index([2, 0, 0]), None);
        let f = ScalarField::random_unit(g, 4);
        let back = idft(&dft(&f));
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn index_round_trip() {
        let g = make_grid(3, 8).unwrap();
        for idx in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flat_index(g.multi_index(idx)), idx);
        }
        assert_eq!(g.center(0), [1.0 / 16.0; 3]);
    }

    #[test]
    fn integrate_constant_and_stripe() {
        let g = make_grid(2, 64).unwrap();
        assert_relative_eq!(ScalarField::constant(g, 1.0).integrate(), 1.0, epsilon = 1e-14);
        let stripe = ScalarField::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(stripe.integrate(), 0.5);
    }

    #[test]
    fn integrate_matches_naive_loop() {
        let g = make_grid(2, 32).unwrap();
        let f = ScalarField::random_unit(g, 7);
        let mut naive = 0.0;
        for i in 0..32 {
            for j in 0..32 {
                naive += f.values()[i * 32 + j] / 1024.0;
            }
        }
        assert_relative_eq!(f.integrate(), naive, epsilon = 1e-13);
    }

    #[test]
    fn constant_field_has_single_coefficient() {
        let g = make_grid(2, 16).unwrap();
        let s = dft(&ScalarField::constant(g, 0.3));
        assert_relative_eq!(s.coeffs()[0].re, 0.3, epsilon = 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_mode_has_conjugate_pair() {
        let g = make_grid(2, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let s = dft(&f);
        let lat = g.lattice();
        let plus = s.coeffs()[lat.index_of([1, 0, 0]).unwrap()];
        let minus = s.coeffs()[lat.index_of([-1, 0, 0]).unwrap()];
        assert_relative_eq!(plus.norm(), 0.5, epsilon = 1e-14);
        assert_relative_eq!((plus - minus.conj()).norm(), 0.0, epsilon = 1e-14);
        let others: f64 = s
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                *i != lat.index_of([1, 0, 0]).unwrap() && *i != lat.index_of([-1, 0, 0]).unwrap()
            })
            .map(|(_, c)| c.norm())
            .sum();
        assert!(others < 1e-13);
        // Absolute-coordinate moment is exactly 1/2.
        let m = s.fourier_moment([1, 0, 0]).unwrap();
        assert_relative_eq!(m.re, 0.5, epsilon = 1e-14);
        assert!(m.im.abs() < 1e-14);
    }

    #[test]
    fn round_trip_and_parseval() {
        for (d, n) in [(1, 512), (2, 64), (3, 16)] {
            let g = make_grid(d, n).unwrap();
            let f = ScalarField::random_unit(g, 3);
            let s = dft(&f);
            let back = idft(&s);
            let err = f
                .values()
                .iter()
                .zip(back.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12, "round trip error {err}");
            let l2 = inner(&f, &f).unwrap();
            let spec: f64 = s.coeffs().iter().map(|c| c.norm_sqr()).sum();
            assert_relative_eq!(l2, spec, max_relative = 1e-12);
        }
    }

    #[test]
    fn raster_perimeter_of_stripe() {
        let g = make_grid(2, 32).unwrap();
        let f = ScalarField::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let chi = IndicatorField::from_field(&f).unwrap();
        assert_relative_eq!(chi.raster_perimeter(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let g = make_grid(1, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(ScalarField::new(g, v), Err(Error::NonFinite(3)));
    }
}
