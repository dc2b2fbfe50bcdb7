use mbo_core::energy::energy;
use mbo_core::reference::{reference_radius, Radius, ReferenceKind, ReferenceSolution};
use mbo_core::scheme::equivalent_radius;
use mbo_core::shape::{sample_shape, ShapeSpec};
use mbo_core::{heat_multiplier, make_grid, run, threshold_step, IndicatorField};
use proptest::prelude::*;

#[test]
fn disc_follows_exact_radius() {
    let g = make_grid(2, 256).unwrap();
    let h = 1e-3;
    let traj = run(&sample_shape(&ShapeSpec::centered_disc(0.3), g).unwrap(), h, 0.03).unwrap();
    for e in traj.ledger().iter().step_by(5) {
        let exact = reference_radius(ReferenceKind::Sphere, 0.3, e.time, 2).unwrap().or_zero();
        let est = equivalent_radius(e.volume, 2);
        assert!((est - exact).abs() / exact < 0.01, "t = {}: {est} vs {exact}", e.time);
    }
}

#[test]
fn small_sphere_vanishes_after_extinction() {
    let g = make_grid(3, 32).unwrap();
    let r0 = 0.15;
    let exact = ReferenceSolution::new(ReferenceKind::Sphere, r0, 3).unwrap();
    let t_final = 1.5 * exact.extinction_time();
    let traj = run(&sample_shape(&ShapeSpec::centered_disc(r0), g).unwrap(), 1e-3, t_final).unwrap();
    assert_eq!(traj.fields().last().unwrap().count(), 0);
    assert!(matches!(
        reference_radius(ReferenceKind::Sphere, r0, t_final, 3).unwrap(),
        Radius::Extinct { .. }
    ));
    assert!(traj.check().monotonicity_slack >= -1e-12);
}

#[test]
fn stripe_never_moves() {
    let g = make_grid(2, 128).unwrap();
    let chi0 = sample_shape(&ShapeSpec::stripe(0.4), g).unwrap();
    let traj = run(&chi0, 2e-3, 0.02).unwrap();
    assert!(traj.fields().iter().all(|f| f == &chi0));
    assert!(traj.ledger().iter().all(|e| e.dissipation == 0.0));
}

fn indicator(n: usize, cells: &[bool]) -> IndicatorField {
    IndicatorField::from_bools(make_grid(2, n).unwrap(), cells.iter().copied()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // One step commutes with periodic shifts and with taking complements
    // (away from ties), and never raises the energy.
    #[test]
    fn step_symmetries(
        cells in proptest::collection::vec(any::<bool>(), 256),
        shift in (0isize..16, 0isize..16),
        log_h in -3.0f64..-1.5,
    ) {
        let h = 10f64.powf(log_h);
        let chi = indicator(16, &cells);
        let kernel = heat_multiplier(chi.grid(), h).unwrap();
        let next = threshold_step(&chi, &kernel);

        let s = [shift.0, shift.1, 0];
        prop_assert_eq!(threshold_step(&chi.roll(s), &kernel), next.roll(s));

        let e0 = energy(&chi.to_field(), h).unwrap();
        let e1 = energy(&next.to_field(), h).unwrap();
        prop_assert!(e1 <= e0 + 1e-12);

        let comp = IndicatorField::from_field(&chi.to_field().complement()).unwrap();
        let heat = kernel.convolve_raw(&chi.to_field());
        let tie_free = heat.values().iter().all(|v| (v - 0.5).abs() > 1e-9);
        if tie_free {
            let comp_next = IndicatorField::from_field(&next.to_field().complement()).unwrap();
            prop_assert_eq!(threshold_step(&comp, &kernel), comp_next);
        }
    }
}
