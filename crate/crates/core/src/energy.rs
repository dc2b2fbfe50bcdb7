//! The approximate interfacial energy `E_h`, the metric `d_h`, per-step
//! dissipation, and the elementary inequalities relating them.
//!
//! ```text
//! E_h(u)        = h^{-1/2} ∫ (1 - u) G_h * u dx
//! d_h(u, u')²   = 2 √h ∫ |G_{h/2} * (u - u')|² dx = 2 √h Σ_k exp(-h|k|²/2) |F(u - u')(k)|²
//! ```
//!
//! Both only need the multiplier of `G_h`, since `G_{h/2} * G_{h/2} = G_h`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dft, integrate, GridSpec, IndicatorField, ScalarField, Spectrum};
use crate::kernel::HeatMultiplier;
use crate::scheme::Trajectory;

/// Slack below which an inequality counts as violated (round-off allowance).
pub const SLACK_TOLERANCE: f64 = -1e-10;

/// Per-step budget of a thresholding run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    /// `d_h(χ^n, χ^{n-1})`, zero for the initial entry.
    pub metric_increment: f64,
    /// `(1 / 2h²) d_h(χ^n, χ^{n-1})²`.
    pub dissipation: f64,
    pub volume: f64,
}

/// `E_h(u)` by quadrature of the defining integral.
pub fn energy(u: &ScalarField, h: f64) -> Result<f64> {
    u.check_unit_range()?;
    let kernel = HeatMultiplier::new(u.grid(), h)?;
    Ok(energy_with(&kernel, u))
}

/// `E_h(u)` for a prebuilt kernel; no range check.
pub fn energy_with(kernel: &HeatMultiplier, u: &ScalarField) -> f64 {
    let gu = kernel.convolve_raw(u);
    let dv = u.grid().cell_volume();
    let s: f64 = u
        .values()
        .iter()
        .zip(gu.values())
        .map(|(&a, &b)| (1.0 - a) * b)
        .sum();
    s * dv / kernel.h().sqrt()
}

/// `E_h` from the spectrum of `u`: `h^{-1/2} (F(0) - Σ_k m(k) |F(k)|²)`.
pub fn energy_from_spectrum(kernel: &HeatMultiplier, s: &Spectrum) -> f64 {
    let mean = s.coeffs()[0].re;
    (mean - s.weighted_norm_sq(kernel.values())) / kernel.h().sqrt()
}

/// `d_h(u, u')²` computed from the spectrum of `u - u'`.
pub fn metric_sq_from_spectrum(kernel: &HeatMultiplier, diff: &Spectrum) -> f64 {
    (2.0 * kernel.h().sqrt() * diff.weighted_norm_sq(kernel.values())).max(0.0)
}

pub fn metric_sq_with(kernel: &HeatMultiplier, u: &ScalarField, v: &ScalarField) -> Result<f64> {
    let diff = u.zip_map(v, |a, b| a - b)?;
    Ok(metric_sq_from_spectrum(kernel, &dft(&diff)))
}

/// `d_h(u, u')`.
pub fn metric(u: &ScalarField, v: &ScalarField, h: f64) -> Result<f64> {
    u.grid().ensure_same(&v.grid())?;
    u.check_unit_range()?;
    v.check_unit_range()?;
    let kernel = HeatMultiplier::new(u.grid(), h)?;
    Ok(metric_sq_with(&kernel, u, v)?.sqrt())
}

/// `(1 / 2h²) d_h(χ, χ')²`.
pub fn dissipation_step(chi: &IndicatorField, chi_prev: &IndicatorField, h: f64) -> Result<f64> {
    let kernel = HeatMultiplier::new(chi.grid(), h)?;
    let d2 = metric_sq_with(&kernel, &chi.to_field(), &chi_prev.to_field())?;
    Ok(d2 / (2.0 * h * h))
}

/// One checked inequality `lhs ≤ rhs`; `slack = rhs - lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    pub fn holds(&self) -> bool {
        self.slack >= SLACK_TOLERANCE
    }
}

/// Slacks of the six elementary inequalities on `E_h` and `d_h`.
///
/// | field | inequality |
/// |---|---|
/// | `l1_smoothing` | `∫|u - G_h*u| ≤ 2√h E_h(u)` |
/// | `coarsening` | `E_{h0}(u) ≤ E_h(u)` for `h0 ∈ N² h` |
/// | `subadditivity` | `√h0 E_{h0} ≤ √h E_h + √h' E_{h'}`, `√h0 = √h + √h'` |
/// | `l2_smoothing` | `∫(u - G_{h0}*u)² ≤ 4√h0 E_h(u)` for `h0 ≥ h` |
/// | `l1_distance` | `∫|χ - χ'| ≤ d_h²/(2√h) + 2√h (E_h(χ) + E_h(χ'))` |
/// | `pointwise` | `|u - u'| ≤ (1-u)u' + u(1-u')` |
///
/// Each entry is either a check or the precondition it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub l1_smoothing: Result<InequalityCheck>,
    pub coarsening: Result<InequalityCheck>,
    pub subadditivity: Result<InequalityCheck>,
    pub l2_smoothing: Result<InequalityCheck>,
    pub l1_distance: Result<InequalityCheck>,
    pub pointwise: Result<InequalityCheck>,
}

impl InequalityReport {
    pub fn entries(&self) -> [(&'static str, &Result<InequalityCheck>); 6] {
        [
            ("l1_smoothing", &self.l1_smoothing),
            ("coarsening", &self.coarsening),
            ("subadditivity", &self.subadditivity),
            ("l2_smoothing", &self.l2_smoothing),
            ("l1_distance", &self.l1_distance),
            ("pointwise", &self.pointwise),
        ]
    }

    /// Smallest slack over the checks that ran.
    pub fn min_slack(&self) -> f64 {
        self.entries()
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok().map(|c| c.slack))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_hold(&self) -> bool {
        self.entries()
            .iter()
            .all(|(_, r)| r.as_ref().map_or(true, InequalityCheck::holds))
    }
}

fn perfect_square_ratio(h0: f64, h: f64) -> Option<u64> {
    let root = (h0 / h).sqrt();
    let r = root.round();
    ((root - r).abs() < 1e-9 * root.max(1.0) && r >= 1.0).then_some(r as u64)
}

pub fn inequality_suite(
    u: &ScalarField,
    u_prime: &ScalarField,
    h: f64,
    h0: f64,
) -> Result<InequalityReport> {
    u.grid().ensure_same(&u_prime.grid())?;
    u.check_unit_range()?;
    u_prime.check_unit_range()?;
    let grid = u.grid();
    let k_h = HeatMultiplier::new(grid, h)?;
    let k_h0 = HeatMultiplier::new(grid, h0)?;
    let e_h = energy_with(&k_h, u);
    let e_h0 = energy_with(&k_h0, u);

    let gu = k_h.convolve_raw(u);
    let l1 = integrate(&u.zip_map(&gu, |a, b| (a - b).abs())?);
    let l1_smoothing = Ok(InequalityCheck::new(l1, 2.0 * h.sqrt() * e_h));

    let coarsening = match perfect_square_ratio(h0, h) {
        Some(_) => Ok(InequalityCheck::new(e_h0, e_h)),
        None => Err(Error::Precondition {
            check: "coarsening",
            reason: format!("h0/h = {} is not a perfect square", h0 / h),
        }),
    };

    let subadditivity = if h0 > h {
        let h_rest = (h0.sqrt() - h.sqrt()).powi(2);
        let e_rest = energy_with(&HeatMultiplier::new(grid, h_rest)?, u);
        Ok(InequalityCheck::new(
            h0.sqrt() * e_h0,
            h.sqrt() * e_h + h_rest.sqrt() * e_rest,
        ))
    } else {
        Err(Error::Precondition {
            check: "subadditivity",
            reason: format!("needs h0 > h, got h0 = {h0}, h = {h}"),
        })
    };

    let l2_smoothing = if h0 >= h {
        let g0u = k_h0.convolve_raw(u);
        let l2 = integrate(&u.zip_map(&g0u, |a, b| (a - b).powi(2))?);
        Ok(InequalityCheck::new(l2, 4.0 * h0.sqrt() * e_h))
    } else {
        Err(Error::Precondition {
            check: "l2_smoothing",
            reason: format!("needs h0 >= h, got h0 = {h0}, h = {h}"),
        })
    };

    let l1_distance = if u.is_indicator() && u_prime.is_indicator() {
        let diff = integrate(&u.zip_map(u_prime, |a, b| (a - b).abs())?);
        let d2 = metric_sq_with(&k_h, u, u_prime)?;
        let e_prime = energy_with(&k_h, u_prime);
        Ok(InequalityCheck::new(
            diff,
            d2 / (2.0 * h.sqrt()) + 2.0 * h.sqrt() * (e_h + e_prime),
        ))
    } else {
        Err(Error::Precondition {
            check: "l1_distance",
            reason: "requires {0,1}-valued inputs".into(),
        })
    };

    let pointwise = Ok(pointwise_check(u, u_prime));

    Ok(InequalityReport {
        l1_smoothing,
        coarsening,
        subadditivity,
        l2_smoothing,
        l1_distance,
        pointwise,
    })
}

/// Elementary bound `|a - b| ≤ (1-a) b + a (1-b)` for `a, b ∈ [0,1]`.
pub fn pointwise_bound_slack(a: f64, b: f64) -> f64 {
    (1.0 - a) * b + a * (1.0 - b) - (a - b).abs()
}

fn pointwise_check(u: &ScalarField, v: &ScalarField) -> InequalityCheck {
    // Report the cell with the smallest slack.
    let mut worst = InequalityCheck::new(0.0, 0.0);
    let mut min_slack = f64::INFINITY;
    for (&a, &b) in u.values().iter().zip(v.values()) {
        let slack = pointwise_bound_slack(a, b);
        if slack < min_slack {
            min_slack = slack;
            worst = InequalityCheck::new((a - b).abs(), (1.0 - a) * b + a * (1.0 - b));
        }
    }
    worst
}

/// `L¹` modulus of continuity in time of a piecewise-constant trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeModulus {
    pub s: f64,
    /// `∫_s^T ∫ |χ(t) - χ(t-s)| dx dt`.
    pub integral: f64,
    /// `C0 · {s/√h, 2√h, 4s}` by regime.
    pub regime_bound: f64,
    /// `4 C0 √s`.
    pub bound: f64,
    pub c0: f64,
}

/// `C0 = ∫_h^T (1/2h²) d_h²(χ(t), χ(t-h)) dt + 4 ∫_0^T E_h(χ(t)) dt`.
pub fn modulus_constant(traj: &Trajectory) -> f64 {
    let h = traj.h();
    let t_end = traj.t_final();
    let mut dissipation = 0.0;
    let mut energy = 0.0;
    for entry in traj.ledger() {
        let start = entry.step as f64 * h;
        if start >= t_end {
            break;
        }
        let len = ((entry.step + 1) as f64 * h).min(t_end) - start;
        energy += len * entry.energy;
        if entry.step >= 1 {
            dissipation += len * entry.dissipation;
        }
    }
    dissipation + 4.0 * energy
}

pub fn time_modulus(traj: &Trajectory, s: f64) -> Result<TimeModulus> {
    let h = traj.h();
    let t_end = traj.t_final();
    if !(0.0..=t_end.min(1.0)).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "time shift {s} outside [0, min(1, T)] = [0, {}]",
            t_end.min(1.0)
        )));
    }
    let mut breaks = vec![s, t_end];
    let mut n = 0usize;
    loop {
        let t = n as f64 * h;
        if t >= t_end {
            break;
        }
        if t > s {
            breaks.push(t);
        }
        if t + s > s && t + s < t_end {
            breaks.push(t + s);
        }
        n += 1;
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let a = traj.index_at(mid);
        let b = traj.index_at(mid - s);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        let diff = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = traj.fields()[a].symmetric_difference(&traj.fields()[b])?;
                cache.insert(key, v);
                v
            }
        };
        integral += len * diff;
    }

    let c0 = modulus_constant(traj);
    let sh = h.sqrt();
    let regime = if s <= h {
        s / sh
    } else if s <= sh {
        2.0 * sh
    } else {
        4.0 * s
    };
    Ok(TimeModulus {
        s,
        integral,
        regime_bound: c0 * regime,
        bound: 4.0 * c0 * s.sqrt(),
        c0,
    })
}

/// Convenience for callers holding a grid and `h` rather than a kernel.
pub fn kernel_for(grid: GridSpec, h: f64) -> Result<HeatMultiplier> {
    HeatMultiplier::new(grid, h)
}
