//! Command-line front end for the thresholding scheme.
//!
//! Exit codes: 0 on success, 1 for invalid input (flags, config, shapes),
//! 2 when a numerical check fails or a solver gives up. A numerical
//! failure also writes `failures.json` next to the other outputs and
//! prints the same JSON to stderr.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::{Check, Report};
use crate::config::{ConfigArgs, RunConfig};
use crate::output::OutputDir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mbo", version, about = "Thresholding scheme for mean curvature flow on the torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scheme and write the energy ledger (plus optional diagnostics).
    Run(ConfigArgs),
    /// Interpolate between steps and write the distance/energy profile.
    Interp(ConfigArgs),
    /// Compare the lower and upper metric slope bounds along one step.
    Slope(ConfigArgs),
    /// Pair measures, perimeter and dissipation density.
    Measures(ConfigArgs),
    /// Evaluate the Gaussian moment identities.
    Identities(ConfigArgs),
    /// Final-radius error against the exact flow for several time steps.
    Converge(ConfigArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Interp(_) => "interp",
            Command::Slope(_) => "slope",
            Command::Measures(_) => "measures",
            Command::Identities(_) => "identities",
            Command::Converge(_) => "converge",
        }
    }

    fn args(&self) -> &ConfigArgs {
        match self {
            Command::Run(a)
            | Command::Interp(a)
            | Command::Slope(a)
            | Command::Measures(a)
            | Command::Identities(a)
            | Command::Converge(a) => a,
        }
    }
}

/// Whether an error is a numerical failure (exit 2) or bad input (exit 1).
pub fn is_numerical(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<mbo_core::Error>(),
            Some(
                mbo_core::Error::SolverFailed { .. }
                    | mbo_core::Error::NotConverged(_)
                    | mbo_core::Error::SingularSystem(_)
            )
        )
    })
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Report> {
    match command {
        Command::Run(_) => commands::run_cmd(cfg, out),
        Command::Interp(_) => commands::interp_cmd(cfg, out),
        Command::Slope(_) => commands::slope_cmd(cfg, out),
        Command::Measures(_) => commands::measures_cmd(cfg, out),
        Command::Identities(_) => commands::identities_cmd(cfg, out),
        Command::Converge(_) => commands::converge_cmd(cfg, out),
    }
}

fn report_failures(
    out: &mut OutputDir,
    failed: &[Check],
    error: Option<String>,
) -> anyhow::Result<()> {
    let payload = json!({ "failed_checks": failed, "error": error });
    out.json("failures.json", &payload)?;
    eprintln!("{}", serde_json::to_string(&payload)?);
    Ok(())
}

fn execute(command: &Command) -> i32 {
    let name = command.name();
    let cfg = match command.args().resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_VALIDATION;
        }
    };
    let mut out = match OutputDir::create(&cfg, name) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_VALIDATION;
        }
    };
    let finish = |out: &mut OutputDir, status: &str, results| {
        if let Err(e) = out.manifest(name, &cfg, status, results) {
            eprintln!("error: {e:#}");
        }
    };

    match dispatch(command, &cfg, &mut out) {
        Ok(report) => {
            let failed: Vec<Check> = report.checks.iter().filter(|c| !c.pass).cloned().collect();
            let results = json!({ "checks": report.checks, "summary": report.results });
            if failed.is_empty() {
                finish(&mut out, "ok", results);
                println!("{}", out.root().display());
                EXIT_OK
            } else {
                if let Err(e) = report_failures(&mut out, &failed, None) {
                    eprintln!("error: {e:#}");
                }
                finish(&mut out, "failed", results);
                EXIT_NUMERICAL
            }
        }
        Err(e) if is_numerical(&e) => {
            if let Err(w) = report_failures(&mut out, &[], Some(format!("{e:#}"))) {
                eprintln!("error: {w:#}");
            }
            finish(&mut out, "failed", serde_json::Value::Null);
            EXIT_NUMERICAL
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            finish(&mut out, "invalid", serde_json::Value::Null);
            EXIT_VALIDATION
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_are_classified() {
        let solver: anyhow::Error = mbo_core::Error::SolverFailed {
            iterations: 3,
            residual: 1.0,
        }
        .into();
        assert!(is_numerical(&solver));
        assert!(is_numerical(&solver.context("step 4")));
        let bad: anyhow::Error = mbo_core::Error::InvalidParameter("h".into()).into();
        assert!(!is_numerical(&bad));
        assert!(!is_numerical(&anyhow::anyhow!("plain")));
    }

    #[test]
    fn parse_errors_exit_with_validation_code() {
        assert_eq!(main_with_args(["mbo", "bogus"]), EXIT_VALIDATION);
        assert_eq!(main_with_args(["mbo", "run", "--n", "many"]), EXIT_VALIDATION);
        assert_eq!(main_with_args(["mbo", "--help"]), EXIT_OK);
    }

    #[test]
    fn every_subcommand_parses() {
        for name in ["run", "interp", "slope", "measures", "identities", "converge"] {
            let cli = Cli::try_parse_from(["mbo", name, "--h", "1e-3,2e-3"]).unwrap();
            assert_eq!(cli.command.name(), name);
            assert_eq!(cli.command.args().h, Some(vec![1e-3, 2e-3]));
        }
    }
}
