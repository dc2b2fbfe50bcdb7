//! Initial configurations sampled at cell centers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, IndicatorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// `{x_1 < width}`.
    Stripe { width: f64 },
    /// Ball of `radius` around `center` in the torus distance.
    Disc { center: [f64; 3], radius: f64 },
    /// Two balls joined by a bar of half-width `bar_half_width` along the
    /// segment between the centers.
    Dumbbell {
        left: [f64; 3],
        right: [f64; 3],
        radius: f64,
        bar_half_width: f64,
    },
    /// Independent cells set with probability `fill`.
    Random { fill: f64, seed: u64 },
    Full,
    Empty,
}

impl ShapeSpec {
    pub fn disc(center: [f64; 3], radius: f64) -> Self {
        ShapeSpec::Disc { center, radius }
    }

    /// Disc centered in the torus.
    pub fn centered_disc(radius: f64) -> Self {
        ShapeSpec::Disc {
            center: [0.5; 3],
            radius,
        }
    }

    pub fn stripe(width: f64) -> Self {
        ShapeSpec::Stripe { width }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        match *self {
            ShapeSpec::Stripe { width } => {
                if !in_unit(width) {
                    return Err(Error::DegenerateShape(format!("stripe width {width}")));
                }
            }
            ShapeSpec::Disc { radius, .. } => check_radius(radius)?,
            ShapeSpec::Dumbbell {
                radius,
                bar_half_width,
                ..
            } => {
                check_radius(radius)?;
                if bar_half_width <= 0.0 || bar_half_width > radius {
                    return Err(Error::DegenerateShape(format!(
                        "bar half-width {bar_half_width} must lie in (0, radius]"
                    )));
                }
            }
            ShapeSpec::Random { fill, .. } => {
                if !(0.0..=1.0).contains(&fill) {
                    return Err(Error::DegenerateShape(format!("fill {fill}")));
                }
            }
            ShapeSpec::Full | ShapeSpec::Empty => {}
        }
        Ok(())
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius <= 0.0 || radius >= 0.5 || !radius.is_finite() {
        return Err(Error::DegenerateShape(format!(
            "radius {radius} must lie in (0, 0.5)"
        )));
    }
    Ok(())
}

/// Minimum-image displacement `x - c` on the unit torus.
pub fn torus_displacement(x: [f64; 3], c: [f64; 3], dim: usize) -> [f64; 3] {
    let mut d = [0.0; 3];
    for a in 0..dim {
        let v = x[a] - c[a];
        d[a] = v - v.round();
    }
    d
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn sample_shape(shape: &ShapeSpec, grid: GridSpec) -> Result<IndicatorField> {
    shape.validate()?;
    let dim = grid.dim();
    let cells: Vec<bool> = match *shape {
        ShapeSpec::Stripe { width } => (0..grid.len()).map(|i| grid.center(i)[0] < width).collect(),
        ShapeSpec::Disc { center, radius } => (0..grid.len())
            .map(|i| norm(torus_displacement(grid.center(i), center, dim)) < radius)
            .collect(),
        ShapeSpec::Dumbbell {
            left,
            right,
            radius,
            bar_half_width,
        } => {
            // Bar runs along the straight segment left -> right in the unit cell.
            let mut axis = [0.0; 3];
            for a in 0..dim {
                axis[a] = right[a] - left[a];
            }
            let len2 = axis.iter().map(|v| v * v).sum::<f64>();
            (0..grid.len())
                .map(|i| {
                    let x = grid.center(i);
                    let dl = torus_displacement(x, left, dim);
                    if norm(dl) < radius || norm(torus_displacement(x, right, dim)) < radius {
                        return true;
                    }
                    if len2 == 0.0 {
                        return false;
                    }
                    let t = (0..3).map(|a| dl[a] * axis[a]).sum::<f64>() / len2;
                    if !(0.0..=1.0).contains(&t) {
                        return false;
                    }
                    let perp = [dl[0] - t * axis[0], dl[1] - t * axis[1], dl[2] - t * axis[2]];
                    norm(perp) < bar_half_width
                })
                .collect()
        }
        ShapeSpec::Random { fill, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.len()).map(|_| rng.random::<f64>() < fill).collect()
        }
        ShapeSpec::Full => vec![true; grid.len()],
        ShapeSpec::Empty => vec![false; grid.len()],
    };
    IndicatorField::from_bools(grid, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn disc_volume_close_to_area() {
        let g = make_grid(2, 256).unwrap();
        let chi = sample_shape(&ShapeSpec::centered_disc(0.3), g).unwrap();
        assert!((chi.volume() - PI * 0.09).abs() < 2.0 / 256.0);
    }

    #[test]
    fn disc_volume_error_shrinks_with_resolution() {
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let g = make_grid(2, n).unwrap();
                // Off-lattice center so the error is not accidentally tiny.
                let chi = sample_shape(&ShapeSpec::disc([0.4, 0.53, 0.0], 0.3), g).unwrap();
                (chi.volume() - PI * 0.09).abs()
            })
            .collect();
        for (k, &e) in errs.iter().enumerate() {
            let n = [64.0, 128.0, 256.0][k];
            assert!(e < 2.0 / n, "n={n}: error {e}");
        }
    }

    #[test]
    fn stripe_sets_half_the_columns() {
        let g = make_grid(2, 64).unwrap();
        let chi = sample_shape(&ShapeSpec::stripe(0.5), g).unwrap();
        assert_eq!(chi.count(), 32 * 64);
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(chi.get(i * 64 + j), i < 32);
            }
        }
    }

    #[test]
    fn full_and_random() {
        let g = make_grid(2, 16).unwrap();
        assert_eq!(sample_shape(&ShapeSpec::Full, g).unwrap().count(), 256);
        let a = sample_shape(&ShapeSpec::Random { fill: 0.5, seed: 3 }, g).unwrap();
        let b = sample_shape(&ShapeSpec::Random { fill: 0.5, seed: 3 }, g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let g = make_grid(2, 16).unwrap();
        assert!(sample_shape(&ShapeSpec::centered_disc(0.0), g).is_err());
        assert!(sample_shape(&ShapeSpec::centered_disc(0.5), g).is_err());
        assert!(sample_shape(&ShapeSpec::stripe(1.0), g).is_err());
    }

    #[test]
    fn dumbbell_contains_bar() {
        let g = make_grid(2, 128).unwrap();
        let shape = ShapeSpec::Dumbbell {
            left: [0.25, 0.5, 0.0],
            right: [0.75, 0.5, 0.0],
            radius: 0.15,
            bar_half_width: 0.03,
        };
        let chi = sample_shape(&shape, g).unwrap();
        let mid = g.flat_index([64, 64, 0]);
        assert!(chi.get(mid));
        let off_bar = g.flat_index([64, 80, 0]);
        assert!(!chi.get(off_bar));
    }
}
