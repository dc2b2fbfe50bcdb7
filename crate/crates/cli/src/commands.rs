//! Subcommand pipelines. Each writes its tables into the output directory
//! and returns the numerical checks it ran plus a JSON summary for the
//! manifest.

use std::f64::consts::PI;

use anyhow::{bail, Context};
use log::{info, warn};
use mbo_core::energy::{energy, SLACK_TOLERANCE};
use mbo_core::identities::gaussian_identity_suite;
use mbo_core::interp::{
    degiorgi_step_check, geometric_r_grid, interpolation_budget, DeGiorgiReport, SolverOptions,
    DEFAULT_MIN_RATIO,
};
use mbo_core::measure::{
    dissipation_density, mass_near_interface, pair_measure, perimeter_estimate, Orientation,
    ZQuadrature,
};
use mbo_core::reference::{reference_radius, ReferenceKind};
use mbo_core::scheme::equivalent_radius;
use mbo_core::snapshot::write_snapshot;
use mbo_core::variation::{slope_lower, VectorFieldBasis};
use mbo_core::{make_grid, run, sample_shape, ScalarField, Trajectory, C0};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, ShapeKind};
use crate::output::{Cell, OutputDir};

/// Below this `√h/Δx` thresholding freezes on the grid.
const PINNING_WARN: f64 = 4.0;
/// Tolerance on the sandwich `slope_lower ≤ slope_upper`.
const SANDWICH_TOL: f64 = 1e-8;
/// Tolerance on `E(u(r)) ≤ E(χ_prev)`.
const ENERGY_TOL: f64 = 1e-8;
/// Relative tolerance on the pair-measure sum identity.
const SUM_IDENTITY_TOL: f64 = 1e-6;
/// Largest Gaussian identity residual accepted.
const IDENTITY_TOL: f64 = 1e-6;
/// `≥ 90%` of the dissipation density within `4√h` of the interface.
const CONCENTRATION_LEVEL: f64 = 0.9;

pub const LEDGER_HEADER: [&str; 8] = [
    "step",
    "time",
    "energy",
    "metric_increment",
    "dissipation",
    "volume",
    "radius_est",
    "radius_ref",
];
pub const INTERP_HEADER: [&str; 8] = [
    "step",
    "r",
    "e",
    "dist",
    "slope_upper",
    "slope_lower",
    "iters",
    "residual",
];
pub const SLOPE_HEADER: [&str; 6] = ["r", "slope_lower", "slope_upper", "K", "ridge", "residual"];
pub const MEASURES_HEADER: [&str; 5] = ["h", "quantity", "estimate", "comparator", "rel_err"];
pub const CONVERGE_HEADER: [&str; 6] = [
    "h",
    "n",
    "final_radius",
    "ref_radius",
    "rel_err",
    "pinning_ratio",
];

/// A signed numerical check: passes when `value ≥ threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

pub struct Report {
    pub checks: Vec<Check>,
    pub results: Value,
}

fn simulate(cfg: &RunConfig, h: f64) -> anyhow::Result<Trajectory> {
    let grid = make_grid(cfg.d, cfg.n)?;
    let chi0 = sample_shape(&cfg.shape_spec()?, grid)?;
    info!("running {} steps at h = {h}", mbo_core::scheme::step_count(cfg.t_final, h));
    Ok(run(&chi0, h, cfg.t_final)?)
}

/// Exact radius (disc, sphere) or width (stripe) at time `t`; NaN for
/// shapes without a closed-form evolution.
fn reference_size(cfg: &RunConfig, t: f64) -> f64 {
    match cfg.shape {
        ShapeKind::Disc => reference_radius(ReferenceKind::Sphere, cfg.r0, t, cfg.d)
            .map(|r| r.or_zero())
            .unwrap_or(f64::NAN),
        ShapeKind::Stripe => cfg.width,
        _ => f64::NAN,
    }
}

fn size_estimate(cfg: &RunConfig, volume: f64) -> f64 {
    match cfg.shape {
        ShapeKind::Stripe => volume,
        _ => equivalent_radius(volume, cfg.d),
    }
}

/// Interface area of the initial shape.
fn initial_perimeter(cfg: &RunConfig) -> f64 {
    match (cfg.shape, cfg.d) {
        (ShapeKind::Disc, 1) | (ShapeKind::Stripe, _) => 2.0,
        (ShapeKind::Disc, 2) => 2.0 * PI * cfg.r0,
        (ShapeKind::Disc, 3) => 4.0 * PI * cfg.r0 * cfg.r0,
        (ShapeKind::Full | ShapeKind::Empty, _) => 0.0,
        _ => f64::NAN,
    }
}

/// `c0 ∮ V²` for the exact flow of a round or flat shape of size `r`.
fn dissipation_comparator(cfg: &RunConfig, r: f64) -> f64 {
    match (cfg.shape, cfg.d) {
        (ShapeKind::Disc, 2) => C0 * PI / (2.0 * r),
        // V = -1/R on a sphere of area 4πR².
        (ShapeKind::Disc, 3) => 4.0 * PI * C0,
        (ShapeKind::Disc, 1) | (ShapeKind::Stripe, _) => 0.0,
        (ShapeKind::Full | ShapeKind::Empty, _) => 0.0,
        _ => f64::NAN,
    }
}

fn rel_err(estimate: f64, comparator: f64) -> f64 {
    if comparator == 0.0 {
        estimate.abs()
    } else {
        (estimate - comparator).abs() / comparator.abs()
    }
}

fn trajectory_checks(traj: &Trajectory, label: &str) -> Vec<Check> {
    let c = traj.check();
    vec![
        Check::at_least(format!("{label}energy monotonicity"), c.monotonicity_slack, -1e-12),
        Check::at_least(format!("{label}a priori estimate"), c.a_priori_slack, -1e-10),
    ]
}

fn ledger_rows(cfg: &RunConfig, traj: &Trajectory) -> Vec<Vec<Cell>> {
    traj.ledger()
        .iter()
        .map(|e| {
            vec![
                e.step.into(),
                e.time.into(),
                e.energy.into(),
                e.metric_increment.into(),
                e.dissipation.into(),
                e.volume.into(),
                size_estimate(cfg, e.volume).into(),
                reference_size(cfg, e.time).into(),
            ]
        })
        .collect()
}

fn write_snapshots(cfg: &RunConfig, traj: &Trajectory, out: &mut OutputDir) -> anyhow::Result<()> {
    if cfg.snapshot_stride == 0 {
        return Ok(());
    }
    let dir = out.root().join("snapshots");
    std::fs::create_dir_all(&dir)?;
    for (k, field) in traj.fields().iter().enumerate() {
        if k % cfg.snapshot_stride != 0 && k != traj.steps() {
            continue;
        }
        let stem = format!("step_{k:05}");
        write_snapshot(&dir.join(&stem), &field.to_field(), "chi", k as f64 * traj.h())?;
        out.record(format!("snapshots/{stem}.bin"));
        out.record(format!("snapshots/{stem}.json"));
    }
    Ok(())
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol,
        ..SolverOptions::default()
    }
}

fn r_grid(cfg: &RunConfig, h: f64) -> Vec<f64> {
    geometric_r_grid(h, cfg.nodes, DEFAULT_MIN_RATIO)
}

fn default_steps(cfg: &RunConfig, traj: &Trajectory) -> anyhow::Result<Vec<usize>> {
    let steps = if cfg.steps.is_empty() {
        vec![(traj.steps() / 2).max(1)]
    } else {
        cfg.steps.clone()
    };
    for &k in &steps {
        if k == 0 || k > traj.steps() {
            bail!("step {k} outside 1..={}", traj.steps());
        }
    }
    Ok(steps)
}

fn step_check(cfg: &RunConfig, traj: &Trajectory, k: usize) -> anyhow::Result<DeGiorgiReport> {
    let h = traj.h();
    degiorgi_step_check(
        &traj.fields()[k - 1],
        &traj.fields()[k],
        h,
        &r_grid(cfg, h),
        solver_options(cfg),
    )
    .with_context(|| format!("interpolation on step {k}"))
}

fn step_checks(k: usize, report: &DeGiorgiReport) -> Vec<Check> {
    vec![
        Check::at_least(
            format!("step {k}: distance monotone in r"),
            report.monotonicity_slack,
            SLACK_TOLERANCE,
        ),
        Check::at_least(
            format!("step {k}: difference-quotient bounds"),
            report.min_pair_slack(),
            SLACK_TOLERANCE,
        ),
        Check::at_least(
            format!("step {k}: interpolant energy below anchor"),
            report.energy_slack,
            -ENERGY_TOL,
        ),
        Check::at_least(
            format!("step {k}: objective below anchor"),
            report.objective_slack,
            SLACK_TOLERANCE,
        ),
    ]
}

/// Quadrature-limited, so reported rather than enforced.
fn step_summary(k: usize, report: &DeGiorgiReport) -> Value {
    json!({
        "step": k,
        "energy_prev": report.energy_prev,
        "slope_integral": report.slope_integral,
        "energy_identity_slack": report.step_slack,
        "ledger_slack": report.ledger_slack,
        "endpoint_mismatch": report.endpoint_mismatch,
    })
}

fn slope_values(cfg: &RunConfig, report: &DeGiorgiReport) -> anyhow::Result<Vec<(f64, f64)>> {
    let basis = VectorFieldBasis::trigonometric(cfg.d, cfg.k as i64)?;
    report
        .records
        .iter()
        .map(|rec| {
            let s = slope_lower(&rec.u, report.h, &basis, cfg.ridge)?;
            Ok((s.value, s.ridge))
        })
        .collect()
}

fn interp_rows(
    k: usize,
    report: &DeGiorgiReport,
    lower: Option<&[(f64, f64)]>,
) -> Vec<Vec<Cell>> {
    report
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let sl = lower.map_or(f64::NAN, |l| l[i].0);
            vec![
                k.into(),
                rec.r.into(),
                rec.e.into(),
                rec.dist.into(),
                rec.slope_upper.into(),
                sl.into(),
                rec.iterations.into(),
                rec.residual.into(),
            ]
        })
        .collect()
}

fn sandwich_check(k: usize, report: &DeGiorgiReport, lower: &[(f64, f64)]) -> Check {
    let worst = report
        .records
        .iter()
        .zip(lower)
        .map(|(rec, (l, _))| rec.slope_upper - l)
        .fold(f64::INFINITY, f64::min);
    Check::at_least(format!("step {k}: slope_lower <= slope_upper"), worst, -SANDWICH_TOL)
}

fn is_moving(traj: &Trajectory, k: usize) -> bool {
    traj.fields()[k] != traj.fields()[k - 1]
}

/// Interpolation tables for `steps`; returns rows, checks and summaries.
fn interp_steps(
    cfg: &RunConfig,
    traj: &Trajectory,
    steps: &[usize],
) -> anyhow::Result<(Vec<Vec<Cell>>, Vec<Check>, Vec<Value>)> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut summaries = Vec::new();
    for &k in steps {
        let report = step_check(cfg, traj, k)?;
        let lower = if cfg.slope {
            let l = slope_values(cfg, &report)?;
            checks.push(sandwich_check(k, &report, &l));
            Some(l)
        } else {
            None
        };
        rows.extend(interp_rows(k, &report, lower.as_deref()));
        checks.extend(step_checks(k, &report));
        summaries.push(step_summary(k, &report));
    }
    Ok((rows, checks, summaries))
}

fn measure_rows(cfg: &RunConfig, traj: &Trajectory) -> anyhow::Result<(Vec<Vec<Cell>>, Vec<Check>)> {
    let h = traj.h();
    let grid = traj.grid();
    let chi0 = traj.fields()[0].to_field();
    let one = ScalarField::constant(grid, 1.0);
    let quad = ZQuadrature {
        extent: cfg.z_extent,
        points: cfg.z_points,
    };
    let perimeter = initial_perimeter(cfg);
    let mut rows: Vec<(&str, f64, f64)> = Vec::new();

    rows.push(("perimeter", perimeter_estimate(&chi0, h)?, perimeter));
    let inside = pair_measure(&chi0, h, |_| 1.0, &one, quad, Orientation::InsideOut)?;
    let outside = pair_measure(&chi0, h, |_| 1.0, &one, quad, Orientation::OutsideIn)?;
    let e0 = energy(&chi0, h)?;
    rows.push(("pair_inside", inside, C0 * perimeter));
    rows.push(("pair_outside", outside, C0 * perimeter));
    rows.push(("pair_sum", inside + outside, 2.0 * e0));
    let sum_check = Check::at_least(
        "pair measure sum identity",
        -rel_err(inside + outside, 2.0 * e0),
        -SUM_IDENTITY_TOL,
    );

    if traj.steps() >= 1 {
        let t = cfg.measure_time.unwrap_or(0.5 * cfg.t_final);
        let k = ((t / h).round() as usize).clamp(1, traj.steps());
        let (prev, next) = (&traj.fields()[k - 1], &traj.fields()[k]);
        let density = dissipation_density(next, prev, h)?;
        let size = 0.5 * (size_estimate(cfg, prev.volume()) + size_estimate(cfg, next.volume()));
        rows.push(("dissipation_rate", density.integral, dissipation_comparator(cfg, size)));
        let near = mass_near_interface(&density.density, next, 4.0 * h.sqrt())?;
        rows.push(("dissipation_near_interface", near, CONCENTRATION_LEVEL));
    }

    let rows = rows
        .into_iter()
        .map(|(name, est, comp)| {
            vec![
                h.into(),
                Cell::Text(name.to_string()),
                est.into(),
                comp.into(),
                rel_err(est, comp).into(),
            ]
        })
        .collect();
    Ok((rows, vec![sum_check]))
}

pub fn run_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    let traj = simulate(cfg, cfg.h())?;
    out.csv("ledger.csv", &LEDGER_HEADER, &ledger_rows(cfg, &traj))?;
    write_snapshots(cfg, &traj, out)?;
    let mut checks = trajectory_checks(&traj, "");
    let mut results = json!({
        "steps": traj.steps(),
        "pinning_ratio": traj.pinning_ratio(),
        "final_volume": traj.fields().last().map(|f| f.volume()),
    });

    if cfg.interp {
        let moving: Vec<usize> = (1..=traj.steps()).filter(|&k| is_moving(&traj, k)).collect();
        let (rows, step_checks, summaries) = interp_steps(cfg, &traj, &moving)?;
        out.csv("interp.csv", &INTERP_HEADER, &rows)?;
        checks.extend(step_checks);
        let budget = interpolation_budget(&traj, &r_grid(cfg, traj.h()), solver_options(cfg))?;
        checks.push(Check::at_least("velocity budget", budget.slack, SLACK_TOLERANCE));
        results["interp"] = json!({ "steps": summaries, "budget": budget });
    }
    if cfg.measures {
        let (rows, measure_checks) = measure_rows(cfg, &traj)?;
        out.csv("measures.csv", &MEASURES_HEADER, &rows)?;
        checks.extend(measure_checks);
    }
    Ok(Report { checks, results })
}

pub fn interp_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    let traj = simulate(cfg, cfg.h())?;
    let steps = default_steps(cfg, &traj)?;
    let (rows, mut checks, summaries) = interp_steps(cfg, &traj, &steps)?;
    out.csv("interp.csv", &INTERP_HEADER, &rows)?;
    checks.extend(trajectory_checks(&traj, ""));
    Ok(Report {
        checks,
        results: json!({ "steps": summaries }),
    })
}

pub fn slope_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    let traj = simulate(cfg, cfg.h())?;
    let k = default_steps(cfg, &traj)?[0];
    let report = step_check(cfg, &traj, k)?;
    let lower = slope_values(cfg, &report)?;
    let rows: Vec<Vec<Cell>> = report
        .records
        .iter()
        .zip(&lower)
        .map(|(rec, &(l, ridge))| {
            vec![
                rec.r.into(),
                l.into(),
                rec.slope_upper.into(),
                cfg.k.into(),
                ridge.into(),
                rec.residual.into(),
            ]
        })
        .collect();
    out.csv("slope.csv", &SLOPE_HEADER, &rows)?;
    let checks = vec![sandwich_check(k, &report, &lower)];
    Ok(Report {
        checks,
        results: json!({ "step": k, "K": cfg.k, "summary": step_summary(k, &report) }),
    })
}

pub fn measures_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    let traj = simulate(cfg, cfg.h())?;
    let (rows, mut checks) = measure_rows(cfg, &traj)?;
    out.csv("measures.csv", &MEASURES_HEADER, &rows)?;
    checks.extend(trajectory_checks(&traj, ""));
    Ok(Report {
        checks,
        results: Value::Null,
    })
}

pub fn identities_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    let report = gaussian_identity_suite(cfg.quad_extent, cfg.quad_points)?;
    out.json("identities.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Report {
        checks: vec![Check::at_least(
            "Gaussian identity residuals",
            -report.max_residual(),
            -IDENTITY_TOL,
        )],
        results: serde_json::to_value(&report)?,
    })
}

pub fn converge_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    if !matches!(cfg.shape, ShapeKind::Disc | ShapeKind::Stripe) {
        bail!("converge needs a shape with an exact solution (disc or stripe)");
    }
    let mut hs = cfg.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut pinned = false;
    for &h in &hs {
        let traj = simulate(cfg, h)?;
        let t = traj.steps() as f64 * h;
        let last = traj.fields().last().expect("nonempty trajectory");
        let est = size_estimate(cfg, last.volume());
        let reference = reference_size(cfg, t);
        let err = rel_err(est, reference);
        pinned |= traj.pinning_ratio() < PINNING_WARN;
        errors.push(err);
        rows.push(vec![
            h.into(),
            cfg.n.into(),
            est.into(),
            reference.into(),
            err.into(),
            traj.pinning_ratio().into(),
        ]);
        checks.extend(trajectory_checks(&traj, &format!("h={h}: ")));
    }
    out.csv("converge.csv", &CONVERGE_HEADER, &rows)?;
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let flagged = pinned || !monotone;
    if flagged {
        warn!(
            "convergence flagged: errors {} in h{}",
            if monotone { "decrease" } else { "do not decrease" },
            if pinned { "; some runs are pinned" } else { "" }
        );
    }
    Ok(Report {
        checks,
        results: json!({ "monotone": monotone, "pinned": pinned, "flagged": flagged, "errors": errors }),
    })
}
