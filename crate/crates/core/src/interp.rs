//! Variational interpolation between two thresholding steps.
//!
//! For `0 < r ≤ h`, `u(r)` minimizes
//!
//! ```text
//! F_r(u) = (1/2r) d_h²(u, χ_prev) + E_h(u)     over u: T^d → [0,1]
//! ```
//!
//! and `e(r) = F_r(u(r))`. In Fourier variables the quadratic part of
//! `F_r` is `(√h/r - 1/√h) Σ m(k) |û|²`, so `F_r` is convex for `r < h` and
//! affine at `r = h`, where the minimizer is the threshold output.

use serde::Serialize;

use crate::energy::{energy_with, metric_sq_with};
use crate::error::{Error, Result};
use crate::field::{IndicatorField, ScalarField};
use crate::kernel::HeatMultiplier;
use crate::quad::trapezoid_samples;
use crate::scheme::{threshold_step, Trajectory};

/// Default number of nodes of the geometric `r` grid.
pub const DEFAULT_NODES: usize = 16;
/// Default ratio between the smallest node and `h`.
pub const DEFAULT_MIN_RATIO: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the projected-gradient residual is at most this.
    pub tol: f64,
    /// ... or once the certified Frank–Wolfe gap is at most this.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Iterations between convergence checks (each costs one extra
    /// gradient evaluation).
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            gap_tol: 1e-14,
            max_iter: 100_000,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InterpolationRecord {
    pub r: f64,
    pub u: ScalarField,
    /// `e(r) = F_r(u(r))`.
    pub e: f64,
    /// `d_h(u(r), χ_prev)`.
    pub dist: f64,
    /// `dist / r`, an upper bound for the metric slope of `E_h` at `u(r)`.
    pub slope_upper: f64,
    /// `E_h(u(r))`.
    pub energy: f64,
    pub iterations: usize,
    /// `‖u - P(u - ∇F/L)‖ L` in `L²(T^d)` at the returned iterate.
    pub residual: f64,
    /// Frank–Wolfe gap: a certified bound on `F_r(u) - min F_r`.
    pub gap: f64,
}

/// `r_k = h · min_ratio^{1 - k/(nodes-1)}`, `k = 0..nodes`; last node is `h`.
pub fn geometric_r_grid(h: f64, nodes: usize, min_ratio: f64) -> Vec<f64> {
    assert!(nodes >= 2);
    (0..nodes)
        .map(|k| {
            if k == nodes - 1 {
                h
            } else {
                h * min_ratio.powf(1.0 - k as f64 / (nodes - 1) as f64)
            }
        })
        .collect()
}

pub fn default_r_grid(h: f64) -> Vec<f64> {
    geometric_r_grid(h, DEFAULT_NODES, DEFAULT_MIN_RATIO)
}

/// Operators shared by every solve with the same anchor.
struct Problem<'a> {
    kernel: &'a HeatMultiplier,
    chi: ScalarField,
    g_chi: ScalarField,
    h: f64,
    r: f64,
}

impl Problem<'_> {
    /// Gradient `(2√h/r) G*(u-χ) + h^{-1/2}(1 - 2 G*u)` and `F_r(u)`.
    fn gradient_and_value(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let grid = self.chi.grid();
        let gu = self.kernel.convolve_raw(&ScalarField::from_vec_unchecked(grid, u.to_vec()));
        let sh = self.h.sqrt();
        let a = 2.0 * sh / self.r;
        let dv = grid.cell_volume();
        let mut grad = Vec::with_capacity(u.len());
        let mut quad = 0.0;
        let mut energy = 0.0;
        for (i, &ui) in u.iter().enumerate() {
            let g = gu.values()[i];
            let gc = self.g_chi.values()[i];
            grad.push(a * (g - gc) + (1.0 - 2.0 * g) / sh);
            quad += (ui - self.chi.values()[i]) * (g - gc);
            energy += (1.0 - ui) * g;
        }
        let value = (sh / self.r) * quad * dv + energy * dv / sh;
        (grad, value)
    }
}

fn project(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn residual_and_gap(u: &[f64], grad: &[f64], lip: f64, dv: f64) -> (f64, f64) {
    let mut res = 0.0;
    let mut gap = 0.0;
    for (&ui, &g) in u.iter().zip(grad) {
        let step = ui - project(ui - g / lip);
        res += step * step;
        gap += if g > 0.0 { g * ui } else { -g * (1.0 - ui) };
    }
    ((res * dv).sqrt() * lip, gap * dv)
}

/// Solves for `u(r)` starting from `χ_prev` (or `init`).
pub fn interpolate_with(
    chi_prev: &IndicatorField,
    kernel: &HeatMultiplier,
    r: f64,
    opts: SolverOptions,
    init: Option<&ScalarField>,
) -> Result<InterpolationRecord> {
    let h = kernel.h();
    kernel.grid().ensure_same(&chi_prev.grid())?;
    if !(r > 0.0) || r > h * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "interpolation time r = {r} must lie in (0, h = {h}]"
        )));
    }
    let chi = chi_prev.to_field();
    let grid = chi.grid();
    let dv = grid.cell_volume();

    if r >= h * (1.0 - 1e-12) {
        // Affine objective: the threshold output is an exact minimizer.
        let u = threshold_step(chi_prev, kernel).to_field();
        return finish(chi_prev, kernel, h, u, 0, 0.0);
    }

    let g_chi = kernel.convolve_raw(&chi);
    let problem = Problem {
        kernel,
        chi,
        g_chi,
        h,
        r,
    };
    // Exact Lipschitz constant of the gradient: the Hessian is
    // (2√h/r - 2/√h) G_h and 0 < m(k) ≤ 1.
    let sh = h.sqrt();
    let lip = 2.0 * sh / r - 2.0 / sh;

    let mut u: Vec<f64> = match init {
        Some(f) => {
            grid.ensure_same(&f.grid())?;
            f.values().iter().map(|&v| project(v)).collect()
        }
        None => problem.chi.values().to_vec(),
    };

    // Accelerated projected gradient with gradient-based restart.
    let mut y = u.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut grad;
    loop {
        if iterations % opts.check_every == 0 {
            grad = problem.gradient_and_value(&u).0;
            let (residual, gap) = residual_and_gap(&u, &grad, lip, dv);
            if residual <= opts.tol || gap <= opts.gap_tol {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::SolverFailed {
                    iterations,
                    residual,
                });
            }
        }
        let grad_y = problem.gradient_and_value(&y).0;
        let next: Vec<f64> = y
            .iter()
            .zip(&grad_y)
            .map(|(yi, g)| project(yi - g / lip))
            .collect();
        let restart: f64 = y
            .iter()
            .zip(&next)
            .zip(&u)
            .map(|((yi, ni), ui)| (yi - ni) * (ni - ui))
            .sum();
        if restart > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..u.len() {
            y[i] = project(next[i] + beta * (next[i] - u[i]));
        }
        u = next;
        t = t_next;
        iterations += 1;
    }
    let (residual, _) = residual_and_gap(&u, &grad, lip, dv);
    let u = ScalarField::new(grid, u)?;
    let mut rec = finish(chi_prev, kernel, r, u, iterations, residual)?;
    rec.gap = residual_and_gap(rec.u.values(), &grad, lip, dv).1;
    Ok(rec)
}

fn finish(
    chi_prev: &IndicatorField,
    kernel: &HeatMultiplier,
    r: f64,
    u: ScalarField,
    iterations: usize,
    residual: f64,
) -> Result<InterpolationRecord> {
    let d2 = metric_sq_with(kernel, &u, &chi_prev.to_field())?;
    let energy = energy_with(kernel, &u);
    let dist = d2.sqrt();
    Ok(InterpolationRecord {
        r,
        e: d2 / (2.0 * r) + energy,
        dist,
        slope_upper: dist / r,
        energy,
        iterations,
        residual,
        gap: 0.0,
        u,
    })
}

pub fn interpolate(chi_prev: &IndicatorField, h: f64, r: f64, tol: f64) -> Result<InterpolationRecord> {
    let kernel = HeatMultiplier::new(chi_prev.grid(), h)?;
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    interpolate_with(chi_prev, &kernel, r, opts, None)
}

/// Solves at every node of `r_grid` (ascending), warm-starting each solve
/// from the previous node.
pub fn interpolate_grid(
    chi_prev: &IndicatorField,
    kernel: &HeatMultiplier,
    r_grid: &[f64],
    opts: SolverOptions,
) -> Result<Vec<InterpolationRecord>> {
    let mut out: Vec<InterpolationRecord> = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let init = out.last().map(|rec| rec.u.clone());
        out.push(interpolate_with(chi_prev, kernel, r, opts, init.as_ref())?);
    }
    Ok(out)
}

fn check_r_grid(h: f64, r_grid: &[f64]) -> Result<()> {
    let ok = r_grid.len() >= 8
        && r_grid.windows(2).all(|w| w[0] < w[1])
        && r_grid[0] > 0.0
        && (r_grid[r_grid.len() - 1] - h).abs() <= 1e-12 * h;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "r grid must be increasing in (0, h], end at h and have at least 8 nodes".into(),
        ))
    }
}

/// `∫_0^h d²(u(s), χ_prev) / (2 s²) ds` from node values: trapezoid in
/// `log s` on the grid, plus `r_0 · f(r_0)` for `(0, r_0]`.
pub fn slope_integral(records: &[InterpolationRecord]) -> f64 {
    let logs: Vec<f64> = records.iter().map(|r| r.r.ln()).collect();
    // f(s) ds = s f(s) d(log s)
    let vals: Vec<f64> = records
        .iter()
        .map(|rec| rec.dist * rec.dist / (2.0 * rec.r))
        .collect();
    trapezoid_samples(&logs, &vals) + vals[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCheck {
    pub s: f64,
    pub t: f64,
    /// `d²(u(s)) / (2st)`.
    pub lower: f64,
    /// `(e(s) - e(t)) / (t - s)`.
    pub middle: f64,
    /// `d²(u(t)) / (2st)`.
    pub upper: f64,
}

impl PairCheck {
    pub fn lower_slack(&self) -> f64 {
        self.middle - self.lower
    }

    pub fn upper_slack(&self) -> f64 {
        self.upper - self.middle
    }
}

#[derive(Debug, Clone)]
pub struct DeGiorgiReport {
    pub h: f64,
    pub energy_prev: f64,
    pub records: Vec<InterpolationRecord>,
    /// `min_k d²(u(r_{k+1})) - d²(u(r_k))`.
    pub monotonicity_slack: f64,
    pub pairs: Vec<PairCheck>,
    /// `∫_0^h d²(u(s))/(2s²) ds` by trapezoid in `log s`.
    pub slope_integral: f64,
    /// `E(χ_prev) - e(h) - slope_integral`.
    pub step_slack: f64,
    /// `E(χ_prev) - E(χ_next) - (1/2h) d²(χ_next, χ_prev) - ½∫ slope_upper²`.
    pub ledger_slack: f64,
    /// `min_r E(χ_prev) - E(u(r))`.
    pub energy_slack: f64,
    /// `min_r E(χ_prev) - e(r)`.
    pub objective_slack: f64,
    /// Largest distance between `u(h)` and `χ_next` (cells of disagreement
    /// times cell volume).
    pub endpoint_mismatch: f64,
}

impl DeGiorgiReport {
    pub fn min_pair_slack(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.lower_slack().min(p.upper_slack()))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn degiorgi_step_check(
    chi_prev: &IndicatorField,
    chi_next: &IndicatorField,
    h: f64,
    r_grid: &[f64],
    opts: SolverOptions,
) -> Result<DeGiorgiReport> {
    check_r_grid(h, r_grid)?;
    chi_prev.grid().ensure_same(&chi_next.grid())?;
    let kernel = HeatMultiplier::new(chi_prev.grid(), h)?;
    let prev = chi_prev.to_field();
    let energy_prev = energy_with(&kernel, &prev);
    let records = interpolate_grid(chi_prev, &kernel, r_grid, opts)?;

    let mut monotonicity_slack = f64::INFINITY;
    let mut pairs = Vec::with_capacity(records.len() - 1);
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (da, db) = (a.dist * a.dist, b.dist * b.dist);
        monotonicity_slack = monotonicity_slack.min(db - da);
        let st = a.r * b.r;
        pairs.push(PairCheck {
            s: a.r,
            t: b.r,
            lower: da / (2.0 * st),
            middle: (a.e - b.e) / (b.r - a.r),
            upper: db / (2.0 * st),
        });
    }
    let integral = slope_integral(&records);
    let last = records.last().expect("nonempty grid");
    let step_slack = energy_prev - last.e - integral;

    let next = chi_next.to_field();
    let d2_step = metric_sq_with(&kernel, &next, &prev)?;
    let ledger_slack = energy_prev - energy_with(&kernel, &next) - d2_step / (2.0 * h) - integral;

    let energy_slack = records
        .iter()
        .map(|r| energy_prev - r.energy)
        .fold(f64::INFINITY, f64::min);
    let objective_slack = records
        .iter()
        .map(|r| energy_prev - r.e)
        .fold(f64::INFINITY, f64::min);
    let endpoint_mismatch = last
        .u
        .values()
        .iter()
        .zip(next.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * chi_prev.grid().cell_volume();

    Ok(DeGiorgiReport {
        h,
        energy_prev,
        records,
        monotonicity_slack,
        pairs,
        slope_integral: integral,
        step_slack,
        ledger_slack,
        energy_slack,
        objective_slack,
        endpoint_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    /// `∫_0^T (1/2h²) d²(u(t), χ_h(t)) dt`, summed over steps.
    pub aggregate: f64,
    pub initial_energy: f64,
    /// `initial_energy - aggregate`.
    pub slack: f64,
    /// `min` over steps and nodes of `E(χ^{n-1}) - E(u(r))`.
    pub energy_slack: f64,
    pub steps: usize,
}

/// Runs the interpolation on every step of `traj` and aggregates the
/// velocity budget.
pub fn interpolation_budget(
    traj: &Trajectory,
    r_grid: &[f64],
    opts: SolverOptions,
) -> Result<BudgetReport> {
    let h = traj.h();
    check_r_grid(h, r_grid)?;
    let kernel = HeatMultiplier::new(traj.grid(), h)?;
    let initial_energy = traj.ledger()[0].energy;
    let mut aggregate = 0.0;
    let mut energy_slack = f64::INFINITY;
    for n in 1..=traj.steps() {
        let prev = &traj.fields()[n - 1];
        let e_prev = traj.ledger()[n - 1].energy;
        if prev == &traj.fields()[n] {
            // Stationary step: χ_prev minimizes every F_r, so u ≡ χ_prev.
            energy_slack = energy_slack.min(0.0);
            continue;
        }
        let records = interpolate_grid(prev, &kernel, r_grid, opts)?;
        let logs: Vec<f64> = records.iter().map(|r| r.r.ln()).collect();
        let vals: Vec<f64> = records
            .iter()
            .map(|rec| rec.r * rec.dist * rec.dist / (2.0 * h * h))
            .collect();
        aggregate += trapezoid_samples(&logs, &vals) + vals[0];
        for rec in &records {
            energy_slack = energy_slack.min(e_prev - rec.energy);
        }
    }
    if energy_slack == f64::INFINITY {
        energy_slack = 0.0;
    }
    Ok(BudgetReport {
        aggregate,
        initial_energy,
        slack: initial_energy - aggregate,
        energy_slack,
        steps: traj.steps(),
    })
}
