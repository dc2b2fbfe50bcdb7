//! Exact solutions of `V = -H/2` for round and flat shapes.
//!
//! A sphere of radius `R` in `d` dimensions has `H = (d-1)/R`, so
//! `dR/dt = -(d-1)/(2R)` and `R(t)² = R0² - (d-1) t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Disc (`d = 2`) or ball (`d = 3`); in `d = 1` an interval, which
    /// does not move.
    Sphere,
    /// Flat slab; stationary.
    Stripe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Radius {
    Alive { radius: f64 },
    Extinct { extinction_time: f64 },
}

impl Radius {
    pub fn value(&self) -> Option<f64> {
        match self {
            Radius::Alive { radius } => Some(*radius),
            Radius::Extinct { .. } => None,
        }
    }

    /// Radius, or zero once extinct.
    pub fn or_zero(&self) -> f64 {
        self.value().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub r0: f64,
    pub dim: usize,
}

impl ReferenceSolution {
    pub fn new(kind: ReferenceKind, r0: f64, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidParameter(format!("initial radius {r0} must be > 0")));
        }
        Ok(ReferenceSolution { kind, r0, dim })
    }

    pub fn extinction_time(&self) -> f64 {
        match self.kind {
            ReferenceKind::Sphere if self.dim > 1 => self.r0 * self.r0 / (self.dim - 1) as f64,
            _ => f64::INFINITY,
        }
    }

    pub fn radius(&self, t: f64) -> Radius {
        let t_ext = self.extinction_time();
        if t >= t_ext {
            return Radius::Extinct {
                extinction_time: t_ext,
            };
        }
        let radius = match self.kind {
            ReferenceKind::Sphere if self.dim > 1 => {
                (self.r0 * self.r0 - (self.dim - 1) as f64 * t).sqrt()
            }
            _ => self.r0,
        };
        Radius::Alive { radius }
    }
}

pub fn reference_radius(kind: ReferenceKind, r0: f64, t: f64, dim: usize) -> Result<Radius> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    Ok(ReferenceSolution::new(kind, r0, dim)?.radius(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disc_and_ball_radii() {
        let r = reference_radius(ReferenceKind::Sphere, 0.3, 0.05, 2).unwrap();
        assert_relative_eq!(r.value().unwrap(), 0.2, epsilon = 1e-15);
        let r = reference_radius(ReferenceKind::Sphere, 0.3, 0.0, 2).unwrap();
        assert_eq!(r.value(), Some(0.3));
        let r = reference_radius(ReferenceKind::Sphere, 0.3, 0.02, 3).unwrap();
        assert_relative_eq!(r.value().unwrap(), 0.05f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.value().unwrap(), 0.2236, epsilon = 1e-4);
    }

    #[test]
    fn extinction_is_explicit() {
        let r = reference_radius(ReferenceKind::Sphere, 0.3, 0.1, 2).unwrap();
        assert_eq!(
            r,
            Radius::Extinct {
                extinction_time: 0.09
            }
        );
        assert_eq!(r.or_zero(), 0.0);
        let r = reference_radius(ReferenceKind::Sphere, 0.3, 0.09, 2).unwrap();
        assert!(r.value().is_none());
    }

    #[test]
    fn stripe_is_stationary() {
        let r = reference_radius(ReferenceKind::Stripe, 0.25, 3.0, 2).unwrap();
        assert_eq!(r.value(), Some(0.25));
    }

    #[test]
    fn invalid_inputs() {
        assert!(reference_radius(ReferenceKind::Sphere, -0.1, 0.0, 2).is_err());
        assert!(reference_radius(ReferenceKind::Sphere, 0.3, -1.0, 2).is_err());
        assert!(reference_radius(ReferenceKind::Sphere, 0.3, 0.0, 4).is_err());
    }
}
