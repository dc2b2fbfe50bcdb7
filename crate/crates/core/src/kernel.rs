//! The heat kernel `G_h` (heat kernel at time `h/2`) as a spectral multiplier
//! on the torus.
//!
//! `G_h(z) = (2πh)^{-d/2} exp(-|z|²/(2h))` has Fourier transform
//! `exp(-h|k|²/2)`. Multiplying lattice coefficients by it is exactly the
//! convolution with the periodized Gaussian, so the semigroup identity
//! `G_{h/2} * G_{h/2} = G_h` holds to round-off.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{dft, idft, FrequencyLattice, GridSpec, ScalarField, Spectrum};

/// Values within this distance of `[0, 1]` are clamped by [`convolve`].
pub const RANGE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HeatMultiplier {
    h: f64,
    lattice: FrequencyLattice,
    values: Vec<f64>,
}

pub fn heat_multiplier(grid: GridSpec, h: f64) -> Result<HeatMultiplier> {
    HeatMultiplier::new(grid, h)
}

impl HeatMultiplier {
    pub fn new(grid: GridSpec, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel time h = {h} must be > 0")));
        }
        let lattice = grid.lattice();
        let values = lattice
            .k_squared()
            .iter()
            .map(|k2| (-0.5 * h * k2).exp())
            .collect();
        Ok(HeatMultiplier { h, lattice, values })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> GridSpec {
        self.lattice.grid()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    /// Multiplier for integer frequency `m`.
    pub fn at_mode(&self, m: [i64; 3]) -> Option<f64> {
        self.grid().mode_index(m).map(|i| self.values[i])
    }

    pub fn apply_spectrum(&self, s: &Spectrum) -> Spectrum {
        s.apply(|i, c| c * self.values[i])
    }

    /// `G_h * f` with no range policy; linear in `f`.
    pub fn convolve_raw(&self, f: &ScalarField) -> ScalarField {
        idft(&self.apply_spectrum(&dft(f)))
    }

    /// `∂_a G_h * f`.
    pub fn gradient(&self, f: &ScalarField, axis: usize) -> ScalarField {
        self.gradient_spectrum(&dft(f), axis)
    }

    pub fn gradient_spectrum(&self, s: &Spectrum, axis: usize) -> ScalarField {
        idft(&s.apply(|i, c| c * self.values[i] * self.lattice.derivative_factor(i, axis)))
    }

    /// `∂_a ∂_b G_h * f`.
    pub fn hessian_spectrum(&self, s: &Spectrum, a: usize, b: usize) -> ScalarField {
        idft(&s.apply(|i, c| {
            c * self.values[i]
                * self.lattice.derivative_factor(i, a)
                * self.lattice.derivative_factor(i, b)
        }))
    }

    /// Generic filtered inverse transform `F^{-1}[w(i) · m(k) · s]`.
    pub fn filter_spectrum(
        &self,
        s: &Spectrum,
        extra: impl Fn(usize) -> Complex64,
    ) -> ScalarField {
        idft(&s.apply(|i, c| c * self.values[i] * extra(i)))
    }
}

/// `G_h * f`. Rejects NaN input. If `f` is `[0,1]`-valued the output is
/// clamped to `[0,1]` when it strays by at most [`RANGE_CLAMP`] and is an
/// error beyond that.
pub fn convolve(kernel: &HeatMultiplier, f: &ScalarField) -> Result<ScalarField> {
    kernel.grid().ensure_same(&f.grid())?;
    if let Some(i) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let out = kernel.convolve_raw(f);
    if !f.is_unit_range() {
        return Ok(out);
    }
    let mut values = out.into_values();
    for (index, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -RANGE_CLAMP {
                return Err(Error::OutOfRange { index, value: *v });
            }
            *v = 0.0;
        } else if *v > 1.0 {
            if *v > 1.0 + RANGE_CLAMP {
                return Err(Error::OutOfRange { index, value: *v });
            }
            *v = 1.0;
        }
    }
    ScalarField::new(f.grid(), values)
}
