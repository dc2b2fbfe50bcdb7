//! The thresholding scheme: convolve with `G_h`, keep the cells where the
//! result exceeds ½. Each step minimizes `(1/2h) d_h²(u, χ_prev) + E_h(u)`
//! over `[0,1]`-valued `u`, which [`brute_force_step`] confirms by
//! enumeration on tiny grids.

use serde::Serialize;

use crate::energy::{energy_from_spectrum, energy_with, metric_sq_from_spectrum, LedgerEntry};
use crate::error::{Error, Result};
use crate::field::{dft, idft, GridSpec, IndicatorField, ScalarField};
use crate::kernel::HeatMultiplier;

/// Largest cell count [`brute_force_step`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// `χ' = 1` where `G_h * χ > ½` (strict), `0` elsewhere.
pub fn threshold_step(chi: &IndicatorField, kernel: &HeatMultiplier) -> IndicatorField {
    let smoothed = kernel.convolve_raw(&chi.to_field());
    threshold_field(&smoothed)
}

fn threshold_field(smoothed: &ScalarField) -> IndicatorField {
    IndicatorField::from_bools(smoothed.grid(), smoothed.values().iter().map(|&v| v > 0.5))
        .expect("same grid")
}

/// `(1/2h) d_h²(u, χ_prev) + E_h(u)`.
pub fn mm_functional(u: &ScalarField, chi_prev: &IndicatorField, h: f64) -> Result<f64> {
    u.grid().ensure_same(&chi_prev.grid())?;
    u.check_unit_range()?;
    let kernel = HeatMultiplier::new(u.grid(), h)?;
    let prev = chi_prev.to_field();
    let diff = dft(&u.zip_map(&prev, |a, b| a - b)?);
    Ok(metric_sq_from_spectrum(&kernel, &diff) / (2.0 * h) + energy_with(&kernel, u))
}

/// The same objective written as an affine function of `u`:
/// `h^{-1/2} ∫ u (1 - 2 G_h*χ) + h^{-1/2} ∫ χ G_h*χ`.
pub fn mm_functional_affine(u: &ScalarField, chi_prev: &IndicatorField, h: f64) -> Result<f64> {
    u.grid().ensure_same(&chi_prev.grid())?;
    u.check_unit_range()?;
    let kernel = HeatMultiplier::new(u.grid(), h)?;
    let chi = chi_prev.to_field();
    let g = kernel.convolve_raw(&chi);
    let dv = u.grid().cell_volume();
    let linear: f64 = u
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * (1.0 - 2.0 * b))
        .sum();
    let constant: f64 = chi.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    Ok((linear + constant) * dv / h.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Among all minimizers, the one with the fewest cells set; this is
    /// what the strict threshold picks when `G_h*χ = ½` exactly.
    pub minimizer: IndicatorField,
    pub min_value: f64,
    /// Number of binary fields within round-off of the minimum.
    pub num_minimizers: usize,
}

/// Dense matrix of `f ↦ G_h * f` built by a direct cosine sum over the
/// frequency lattice, independent of the FFT path.
fn dense_kernel(grid: GridSpec, h: f64) -> Vec<Vec<f64>> {
    let len = grid.len();
    let d = grid.dim();
    let n = grid.n();
    let modes: Vec<[i64; 3]> = (0..len)
        .map(|i| {
            let mi = grid.multi_index(i);
            let mut m = [0i64; 3];
            for a in 0..d {
                m[a] = grid.mode(mi[a]);
            }
            m
        })
        .collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = vec![vec![0.0; len]; len];
    for i in 0..len {
        for j in 0..len {
            let xi = grid.multi_index(i);
            let xj = grid.multi_index(j);
            let mut s = 0.0;
            for m in &modes {
                let mut k2 = 0.0;
                let mut phase = 0.0;
                for a in 0..d {
                    let k = two_pi * m[a] as f64;
                    k2 += k * k;
                    phase += k * (xi[a] as f64 - xj[a] as f64) / n as f64;
                }
                s += (-0.5 * h * k2).exp() * phase.cos();
            }
            out[i][j] = s / len as f64;
        }
    }
    out
}

/// Exhaustive minimizer of [`mm_functional`] over all binary fields.
pub fn brute_force_step(chi: &IndicatorField, h: f64) -> Result<BruteForceResult> {
    let grid = chi.grid();
    let len = grid.len();
    if len > BRUTE_FORCE_LIMIT {
        return Err(Error::GridTooLarge {
            cells: len,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h} must be > 0")));
    }
    let k = dense_kernel(grid, h);
    let scale = grid.cell_volume() / h.sqrt();
    let prev: Vec<f64> = chi.cells().iter().map(|&c| c as f64).collect();
    let k_prev: Vec<f64> = (0..len)
        .map(|i| (0..len).map(|j| k[i][j] * prev[j]).sum())
        .collect();

    // Gray-code walk; `ku` tracks K u so each state costs O(len).
    let mut u = vec![0.0; len];
    let mut ku = vec![0.0; len];
    let objective = |u: &[f64], ku: &[f64]| -> f64 {
        let mut e = 0.0;
        let mut dist = 0.0;
        for i in 0..len {
            e += (1.0 - u[i]) * ku[i];
            dist += (u[i] - prev[i]) * (ku[i] - k_prev[i]);
        }
        scale * (e + dist)
    };
    let mut values = Vec::with_capacity(1 << len);
    values.push((0u32, objective(&u, &ku)));
    let mut code = 0u32;
    for step in 1u32..(1u32 << len) {
        let bit = step.trailing_zeros() as usize;
        code ^= 1 << bit;
        let delta = if u[bit] == 0.0 { 1.0 } else { -1.0 };
        u[bit] += delta;
        for i in 0..len {
            ku[i] += delta * k[i][bit];
        }
        values.push((code, objective(&u, &ku)));
    }
    let min_value = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-11 * (1.0 + min_value.abs());
    let minimizers: Vec<u32> = values
        .iter()
        .filter(|v| v.1 <= min_value + tol)
        .map(|v| v.0)
        .collect();
    let best = *minimizers
        .iter()
        .min_by_key(|c| (c.count_ones(), c.reverse_bits()))
        .expect("at least one state");
    let minimizer = IndicatorField::from_bools(grid, (0..len).map(|i| best & (1 << i) != 0))?;
    Ok(BruteForceResult {
        minimizer,
        min_value,
        num_minimizers: minimizers.len(),
    })
}

/// Thresholding trajectory `χ^0, ..., χ^N` with its per-step ledger.
///
/// Time convention: `χ_h(t) = χ^n` on `[nh, (n+1)h)` and `χ_h(t) = χ^0` for
/// `t ≤ 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    h: f64,
    t_final: f64,
    fields: Vec<IndicatorField>,
    ledger: Vec<LedgerEntry>,
    pinning_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryCheck {
    /// `min_n E_h(χ^{n-1}) - E_h(χ^n)`.
    pub monotonicity_slack: f64,
    /// `E_h(χ^0) - E_h(χ^N) - Σ (1/2h) d_h²(χ^n, χ^{n-1})`.
    pub a_priori_slack: f64,
}

impl Trajectory {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn grid(&self) -> GridSpec {
        self.fields[0].grid()
    }

    pub fn fields(&self) -> &[IndicatorField] {
        &self.fields
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }

    /// `√h / Δx`; thresholding pins interfaces when this is small.
    pub fn pinning_ratio(&self) -> f64 {
        self.pinning_ratio
    }

    /// Index `n` with `χ_h(t) = χ^n`.
    pub fn index_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.h).floor() as usize).min(self.steps())
    }

    pub fn at_time(&self, t: f64) -> &IndicatorField {
        &self.fields[self.index_at(t)]
    }

    pub fn check(&self) -> TrajectoryCheck {
        let mut monotonicity_slack = f64::INFINITY;
        let mut spent = 0.0;
        for w in self.ledger.windows(2) {
            monotonicity_slack = monotonicity_slack.min(w[0].energy - w[1].energy);
            spent += self.h * w[1].dissipation;
        }
        if self.ledger.len() < 2 {
            monotonicity_slack = 0.0;
        }
        let first = self.ledger[0].energy;
        let last = self.ledger.last().expect("nonempty ledger").energy;
        TrajectoryCheck {
            monotonicity_slack,
            a_priori_slack: first - last - spent,
        }
    }
}

/// Number of steps for horizon `t`: `ceil(t/h)`, tolerant of round-off in
/// the ratio.
pub fn step_count(t: f64, h: f64) -> usize {
    ((t / h) - 1e-9).ceil().max(1.0) as usize
}

pub fn run(chi0: &IndicatorField, h: f64, t_final: f64) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon T = {t_final} must be > 0")));
    }
    let kernel = HeatMultiplier::new(chi0.grid(), h)?;
    let grid = chi0.grid();
    let pinning_ratio = h.sqrt() / grid.spacing();
    if pinning_ratio < 4.0 {
        log::warn!(
            "sqrt(h)/dx = {pinning_ratio:.3} < 4: interfaces may pin to the grid"
        );
    }
    let steps = step_count(t_final, h);
    let mut fields = Vec::with_capacity(steps + 1);
    let mut ledger = Vec::with_capacity(steps + 1);

    let mut spec = dft(&chi0.to_field());
    ledger.push(LedgerEntry {
        step: 0,
        time: 0.0,
        energy: energy_from_spectrum(&kernel, &spec),
        metric_increment: 0.0,
        dissipation: 0.0,
        volume: chi0.volume(),
    });
    fields.push(chi0.clone());
    for n in 1..=steps {
        let smoothed = idft(&kernel.apply_spectrum(&spec));
        let next = threshold_field(&smoothed);
        let next_spec = dft(&next.to_field());
        let d2 = metric_sq_from_spectrum(&kernel, &next_spec.sub(&spec)?);
        ledger.push(LedgerEntry {
            step: n,
            time: n as f64 * h,
            energy: energy_from_spectrum(&kernel, &next_spec),
            metric_increment: d2.sqrt(),
            dissipation: d2 / (2.0 * h * h),
            volume: next.volume(),
        });
        fields.push(next);
        spec = next_spec;
    }
    Ok(Trajectory {
        h,
        t_final,
        fields,
        ledger,
        pinning_ratio,
    })
}

/// Radius of the disc with the same area (or ball with the same volume).
pub fn equivalent_radius(volume: f64, dim: usize) -> f64 {
    match dim {
        1 => 0.5 * volume,
        2 => (volume / std::f64::consts::PI).sqrt(),
        _ => (3.0 * volume / (4.0 * std::f64::consts::PI)).cbrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::field::make_grid;
    use crate::shape::{sample_shape, ShapeSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_indicator(grid: GridSpec, seed: u64) -> IndicatorField {
        let f = ScalarField::random_unit(grid, seed);
        IndicatorField::from_bools(grid, f.values().iter().map(|&v| v > 0.5)).unwrap()
    }

    #[test]
    fn full_and_stripe_are_fixed() {
        let g = make_grid(2, 64).unwrap();
        let k = HeatMultiplier::new(g, 0.002).unwrap();
        let full = IndicatorField::full(g);
        assert_eq!(threshold_step(&full, &k), full);
        let stripe = sample_shape(&ShapeSpec::stripe(0.5), g).unwrap();
        assert_eq!(threshold_step(&stripe, &k), stripe);
    }

    #[test]
    fn short_interval_vanishes() {
        // Centre value 2Φ(L/(2√h)) - 1 ≤ ½ once L ≤ 1.349 √h.
        let g = make_grid(1, 1024).unwrap();
        let h: f64 = 0.01;
        let k = HeatMultiplier::new(g, h).unwrap();
        let make = |len: f64| {
            sample_shape(&ShapeSpec::disc([0.5, 0.0, 0.0], 0.5 * len), g).unwrap()
        };
        let short = make(1.30 * h.sqrt());
        assert_eq!(threshold_step(&short, &k).count(), 0);
        let long = make(1.40 * h.sqrt());
        assert!(threshold_step(&long, &k).count() > 0);
    }

    #[test]
    fn functional_at_anchor_is_energy() {
        let g = make_grid(2, 32).unwrap();
        let chi = random_indicator(g, 3);
        let h = 0.01;
        assert_relative_eq!(
            mm_functional(&chi.to_field(), &chi, h).unwrap(),
            energy(&chi.to_field(), h).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn quadratic_and_affine_forms_agree() {
        let g = make_grid(2, 32).unwrap();
        for seed in 0..5 {
            let chi = random_indicator(g, seed);
            let u = ScalarField::random_unit(g, 100 + seed);
            let a = mm_functional(&u, &chi, 0.005).unwrap();
            let b = mm_functional_affine(&u, &chi, 0.005).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn threshold_output_beats_anchor() {
        let g = make_grid(2, 64).unwrap();
        let h = 0.002;
        let k = HeatMultiplier::new(g, h).unwrap();
        let chi = sample_shape(&ShapeSpec::centered_disc(0.3), g).unwrap();
        let next = threshold_step(&chi, &k);
        let at_next = mm_functional(&next.to_field(), &chi, h).unwrap();
        let at_prev = mm_functional(&chi.to_field(), &chi, h).unwrap();
        assert!(at_next <= at_prev);
    }

    #[test]
    fn brute_force_small_cases() {
        let g = GridSpec::toy(1, 8).unwrap();
        let empty = IndicatorField::empty(g);
        assert_eq!(brute_force_step(&empty, 0.05).unwrap().minimizer, empty);
        let single = IndicatorField::from_bools(g, (0..8).map(|i| i == 3)).unwrap();
        assert_eq!(brute_force_step(&single, 1.0).unwrap().minimizer, empty);
        let big = GridSpec::toy(2, 8).unwrap();
        assert!(matches!(
            brute_force_step(&IndicatorField::empty(big), 0.05),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_matches_threshold_on_4x4() {
        let g = GridSpec::toy(2, 4).unwrap();
        let h = 0.05;
        let k = HeatMultiplier::new(g, h).unwrap();
        for seed in 0..20 {
            let chi = random_indicator(g, seed);
            let bf = brute_force_step(&chi, h).unwrap();
            let th = threshold_step(&chi, &k);
            let value = mm_functional(&th.to_field(), &chi, h).unwrap();
            assert!(value <= bf.min_value + 1e-10 * (1.0 + bf.min_value.abs()), "seed {seed}");
        }
    }

    #[test]
    fn stripe_run_is_stationary() {
        let g = make_grid(2, 64).unwrap();
        let chi = sample_shape(&ShapeSpec::stripe(0.5), g).unwrap();
        let traj = run(&chi, 0.002, 0.02).unwrap();
        assert_eq!(traj.steps(), 10);
        assert!(traj.ledger().iter().all(|e| e.dissipation == 0.0));
        assert!(traj.fields().iter().all(|f| *f == chi));
    }

    #[test]
    fn step_count_rounding() {
        assert_eq!(step_count(0.04, 1e-3), 40);
        assert_eq!(step_count(0.0405, 1e-3), 41);
        assert_eq!(step_count(1e-4, 1e-3), 1);
    }

    #[test]
    fn time_convention() {
        let g = make_grid(1, 16).unwrap();
        let traj = run(&IndicatorField::full(g), 0.1, 0.25).unwrap();
        assert_eq!(traj.steps(), 3);
        assert_eq!(traj.index_at(-1.0), 0);
        assert_eq!(traj.index_at(0.05), 0);
        assert_eq!(traj.index_at(0.15), 1);
        assert_eq!(traj.index_at(10.0), 3);
    }

    #[test]
    fn disc_extinction() {
        let g = make_grid(2, 64).unwrap();
        let chi = sample_shape(&ShapeSpec::centered_disc(0.1), g).unwrap();
        let traj = run(&chi, 2e-3, 0.02).unwrap();
        assert_eq!(traj.fields().last().unwrap().count(), 0);
    }

    #[test]
    fn disc_invariants_hold() {
        let g = make_grid(2, 128).unwrap();
        let chi = sample_shape(&ShapeSpec::centered_disc(0.3), g).unwrap();
        let traj = run(&chi, 2e-3, 0.02).unwrap();
        let c = traj.check();
        assert!(c.monotonicity_slack >= -1e-12, "{c:?}");
        assert!(c.a_priori_slack >= -1e-10, "{c:?}");
    }

    #[test]
    fn nested_discs_stay_nested() {
        let g = make_grid(2, 64).unwrap();
        let small = sample_shape(&ShapeSpec::centered_disc(0.2), g).unwrap();
        let large = sample_shape(&ShapeSpec::centered_disc(0.27), g).unwrap();
        let a = run(&small, 2e-3, 0.02).unwrap();
        let b = run(&large, 2e-3, 0.02).unwrap();
        for (x, y) in a.fields().iter().zip(b.fields()) {
            assert!(x.is_subset_of(y));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn comparison_principle(seed in 0u64..1000, h in 1e-3f64..2e-2) {
            let g = make_grid(2, 16).unwrap();
            let k = HeatMultiplier::new(g, h).unwrap();
            let a = random_indicator(g, seed);
            let extra = random_indicator(g, seed + 7);
            let b = IndicatorField::from_bools(
                g,
                a.cells().iter().zip(extra.cells()).map(|(x, y)| *x == 1 || *y == 1),
            ).unwrap();
            prop_assert!(threshold_step(&a, &k).is_subset_of(&threshold_step(&b, &k)));
        }

        #[test]
        fn translation_equivariance(seed in 0u64..1000, s0 in -8isize..8, s1 in -8isize..8) {
            let g = make_grid(2, 16).unwrap();
            let chi = random_indicator(g, seed);
            let shift = [s0, s1, 0];
            let a = run(&chi, 4e-3, 0.012).unwrap();
            let b = run(&chi.roll(shift), 4e-3, 0.012).unwrap();
            for (x, y) in a.fields().iter().zip(b.fields()) {
                prop_assert_eq!(&x.roll(shift), y);
            }
        }

        #[test]
        fn energy_monotone_and_a_priori(seed in 0u64..1000) {
            let g = make_grid(2, 32).unwrap();
            let chi = random_indicator(g, seed);
            let c = run(&chi, 2e-3, 0.01).unwrap().check();
            prop_assert!(c.monotonicity_slack >= -1e-12);
            prop_assert!(c.a_priori_slack >= -1e-10);
        }
    }
}
