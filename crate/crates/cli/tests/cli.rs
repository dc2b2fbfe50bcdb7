use std::path::Path;
use std::process::{Command, Output};

use mbo_cli::output::Table;
use mbo_core::snapshot::read_snapshot;
use serde_json::Value;

fn mbo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbo"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn disc_run_writes_ledger_snapshots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let args = [
        "run", "--n", "64", "--h", "4e-3", "--T", "0.02", "--R0", "0.3",
        "--snapshot-stride", "2",
    ];
    let out = mbo(&args, &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let table = Table::read(&dir.join("ledger.csv")).unwrap();
    let m = manifest(&dir);
    assert_eq!(table.config_hash, m["config_hash"].as_str().unwrap());
    assert_eq!(m["status"], "ok");
    assert_eq!(
        table.header,
        ["step", "time", "energy", "metric_increment", "dissipation", "volume", "radius_est", "radius_ref"]
    );
    assert_eq!(table.rows.len(), 6);
    let energy = table.column("energy").unwrap();
    assert!(energy.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let est = table.column("radius_est").unwrap();
    let reference = table.column("radius_ref").unwrap();
    assert!((reference[5] - (0.09f64 - 0.02).sqrt()).abs() < 1e-12);
    assert!((est[5] - reference[5]).abs() < 0.02);

    // Strided snapshots plus the final one.
    for k in [0, 2, 4, 5] {
        let (field, meta) = read_snapshot(&dir.join(format!("snapshots/step_{k:05}"))).unwrap();
        assert_eq!(meta.n, 64);
        assert!((meta.time - k as f64 * 4e-3).abs() < 1e-15);
        assert!(field.is_indicator());
    }
    assert!(!dir.join("snapshots/step_00001.bin").exists());
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f == "snapshots/step_00004.bin"));
}

#[test]
fn same_config_same_hash_and_default_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_mbo"))
            .args(["identities"])
            .args(extra)
            .env("MBO_OUTPUT_ROOT", tmp.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out
    };
    run(&[]);
    run(&[]);
    run(&["--quad-points", "500"]);
    let dirs: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(dirs.len(), 2);
}

#[test]
fn stripe_is_stationary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mbo(
        &["run", "--shape", "stripe", "--width", "0.5", "--n", "64", "--h", "4e-3", "--T", "0.02", "--measures"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = Table::read(&tmp.path().join("ledger.csv")).unwrap();
    assert!(table.column("dissipation").unwrap().iter().all(|&d| d == 0.0));
    assert!(table.column("radius_est").unwrap().iter().all(|&w| w == 0.5));

    let measures = Table::read(&tmp.path().join("measures.csv")).unwrap();
    let quantity: Vec<&str> = measures.rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        quantity,
        ["perimeter", "pair_inside", "pair_outside", "pair_sum", "dissipation_rate", "dissipation_near_interface"]
    );
    let rel = measures.column("rel_err").unwrap();
    assert!(rel[0] < 0.01, "flat perimeter {}", rel[0]);
    assert!(rel[3] < 1e-6);
    assert_eq!(measures.column("estimate").unwrap()[4], 0.0);
}

#[test]
fn interp_profile_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mbo(
        &["interp", "--n", "32", "--h", "4e-3", "--T", "0.008", "--R0", "0.3", "--nodes", "8", "--slope", "--K", "1"],
        tmp.path(),
    );
    // The sandwich fails on coarse rasters; everything else must hold.
    let failures: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("failures.json")).unwrap()).unwrap();
    assert_eq!(out.status.code(), Some(2));
    for f in failures["failed_checks"].as_array().unwrap() {
        assert!(f["name"].as_str().unwrap().contains("slope_lower"), "{f}");
    }
    let table = Table::read(&tmp.path().join("interp.csv")).unwrap();
    assert_eq!(table.rows.len(), 8);
    let r = table.column("r").unwrap();
    let dist = table.column("dist").unwrap();
    assert!((r[7] - 4e-3).abs() < 1e-15);
    assert!(dist.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(table.column("slope_lower").unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn slope_violation_exits_numerical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mbo(
        &["slope", "--n", "32", "--h", "4e-3", "--T", "0.008", "--K", "1", "--nodes", "8"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failed_checks"), "{stderr}");
    assert_eq!(manifest(tmp.path())["status"], "failed");
    let table = Table::read(&tmp.path().join("slope.csv")).unwrap();
    assert_eq!(table.header, ["r", "slope_lower", "slope_upper", "K", "ridge", "residual"]);
    assert_eq!(table.rows.len(), 8);
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_config = tmp.path().join("bad.json");
    std::fs::write(&bad_config, r#"{"n": 64, "typo": 1}"#).unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--n", "100"],
        &["run", "--h", "-1"],
        &["run", "--shape", "hexagon"],
        &["frobnicate"],
        &["run", "--config", bad_config.to_str().unwrap()],
    ];
    for args in cases {
        let out = mbo(args, &tmp.path().join("x"));
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn identities_report_small_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mbo(&["identities"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(
        &out.stdout[..out.stdout.iter().rposition(|&b| b == b'}').unwrap() + 1],
    )
    .unwrap();
    let written: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("identities.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
}

#[test]
fn converge_writes_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mbo(
        &["converge", "--n", "64", "--h", "2e-3,8e-3", "--T", "0.016", "--R0", "0.3"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let table = Table::read(&tmp.path().join("converge.csv")).unwrap();
    assert_eq!(table.header, ["h", "n", "final_radius", "ref_radius", "rel_err", "pinning_ratio"]);
    // Sorted from coarse to fine.
    assert_eq!(table.column("h").unwrap(), [8e-3, 2e-3]);
    let pinning = table.column("pinning_ratio").unwrap();
    assert!((pinning[1] - 2e-3f64.sqrt() * 64.0).abs() < 1e-12);
    let summary = &manifest(tmp.path())["results"]["summary"];
    // √h·n < 4 at h = 2e-3 on 64 cells.
    assert_eq!(summary["pinned"], true);
    assert_eq!(summary["flagged"], true);
}
