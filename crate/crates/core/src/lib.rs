//! Thresholding (MBO) scheme for mean curvature flow on the periodic unit
//! torus, with the minimizing-movement diagnostics that come with it:
//! approximate energy `E_h`, metric `d_h`, variational interpolation,
//! metric-slope bounds and dissipation measures.

pub mod energy;
pub mod error;
pub mod field;
pub mod identities;
pub mod interp;
pub mod kernel;
pub mod measure;
pub mod quad;
pub mod reference;
pub mod scheme;
pub mod shape;
pub mod snapshot;
pub mod variation;

/// `1/√(2π)`: energy per unit interface area of the Gaussian kernel.
pub const C0: f64 = 0.398_942_280_401_432_7;

pub use error::{Error, Result};
pub use field::{make_grid, GridSpec, IndicatorField, ScalarField, Spectrum};
pub use kernel::{convolve, heat_multiplier, HeatMultiplier};
pub use scheme::{run, threshold_step, Trajectory};
pub use shape::{sample_shape, ShapeSpec};
