//! Run configuration: a JSON file with the same keys as the command-line
//! flags. Flags override the file; the file overrides the defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use mbo_core::shape::ShapeSpec;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Disc,
    Stripe,
    Dumbbell,
    Random,
    Full,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    /// Time steps; every subcommand but `converge` uses the first.
    #[serde(deserialize_with = "one_or_many")]
    pub h: Vec<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub shape: ShapeKind,
    /// Disc or sphere radius; dumbbell end radius.
    #[serde(rename = "R0")]
    pub r0: f64,
    /// Stripe width.
    pub width: f64,
    /// Fill probability of the random shape.
    pub fill: f64,
    pub seed: u64,
    /// Not part of the config hash.
    pub output_dir: Option<PathBuf>,
    /// Write a field snapshot every this many steps; 0 disables.
    pub snapshot_stride: usize,
    /// `run`: interpolation check on every moving step.
    pub interp: bool,
    /// `run`/`interp`: slope lower bound at every interpolation node.
    pub slope: bool,
    /// `run`: interfacial measures.
    pub measures: bool,
    /// Interpolation nodes per step (geometric, `h/256 ..= h`).
    pub nodes: usize,
    /// Interpolation solver tolerance.
    pub tol: f64,
    /// Trigonometric basis cutoff for the slope lower bound.
    #[serde(rename = "K")]
    pub k: usize,
    pub ridge: Option<f64>,
    /// Steps examined by `interp` and `slope`; empty means the middle step.
    pub steps: Vec<usize>,
    /// Time at which `measures` evaluates the dissipation rate; defaults
    /// to `T/2`.
    pub measure_time: Option<f64>,
    pub quad_extent: f64,
    pub quad_points: usize,
    pub z_extent: f64,
    pub z_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 2,
            n: 256,
            h: vec![1e-3],
            t_final: 0.04,
            shape: ShapeKind::Disc,
            r0: 0.3,
            width: 0.5,
            fill: 0.5,
            seed: 0,
            output_dir: None,
            snapshot_stride: 0,
            interp: false,
            slope: false,
            measures: false,
            nodes: 16,
            tol: 1e-8,
            k: 4,
            ridge: None,
            steps: Vec::new(),
            measure_time: None,
            quad_extent: 8.0,
            quad_points: 400,
            z_extent: 6.0,
            z_points: 160,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Flags shared by every subcommand. All optional so that unset flags
/// fall through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// One step, or a comma-separated list for `converge`.
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    #[arg(long, value_enum)]
    pub shape: Option<ShapeKind>,
    #[arg(long = "R0")]
    pub r0: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub fill: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `$MBO_OUTPUT_ROOT/<command>-<hash>`.
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    #[arg(long = "snapshot-stride")]
    pub snapshot_stride: Option<usize>,
    #[arg(long)]
    pub interp: bool,
    #[arg(long)]
    pub slope: bool,
    #[arg(long)]
    pub measures: bool,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    #[arg(long = "measure-time")]
    pub measure_time: Option<f64>,
    #[arg(long = "quad-extent")]
    pub quad_extent: Option<f64>,
    #[arg(long = "quad-points")]
    pub quad_points: Option<usize>,
    #[arg(long = "z-extent")]
    pub z_extent: Option<f64>,
    #[arg(long = "z-points")]
    pub z_points: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                })*
            };
        }
        take!(d, n, h, t_final, shape, r0, width, fill, seed, snapshot_stride, nodes, tol, k, steps);
        take!(quad_extent, quad_points, z_extent, z_points);
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir.clone();
        }
        if self.ridge.is_some() {
            cfg.ridge = self.ridge;
        }
        if self.measure_time.is_some() {
            cfg.measure_time = self.measure_time;
        }
        cfg.interp |= self.interp;
        cfg.slope |= self.slope;
        cfg.measures |= self.measures;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        mbo_core::make_grid(self.d, self.n)?;
        if self.h.is_empty() {
            bail!("at least one time step h is required");
        }
        for &h in &self.h {
            if !(h > 0.0 && h.is_finite()) {
                bail!("time step h = {h} must be > 0");
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            bail!("final time T = {} must be > 0", self.t_final);
        }
        if self.nodes < 8 {
            bail!("nodes = {} must be >= 8", self.nodes);
        }
        if !(self.tol > 0.0) {
            bail!("tol = {} must be > 0", self.tol);
        }
        if self.k == 0 {
            bail!("K must be >= 1");
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0) {
                bail!("ridge = {r} must be >= 0");
            }
        }
        if self.quad_extent < 6.0 || self.quad_points < 200 {
            bail!("identity quadrature needs extent >= 6 and >= 200 points");
        }
        if self.z_extent < 6.0 || self.z_points < 100 {
            bail!("z quadrature needs extent >= 6 and >= 100 points");
        }
        if let Some(t) = self.measure_time {
            if !(0.0..=self.t_final).contains(&t) {
                bail!("measure_time = {t} must lie in [0, T]");
            }
        }
        self.shape_spec()?;
        Ok(())
    }

    pub fn shape_spec(&self) -> anyhow::Result<ShapeSpec> {
        let spec = match self.shape {
            ShapeKind::Disc => ShapeSpec::centered_disc(self.r0),
            ShapeKind::Stripe => ShapeSpec::stripe(self.width),
            ShapeKind::Dumbbell => ShapeSpec::Dumbbell {
                left: [0.27, 0.5, 0.5],
                right: [0.73, 0.5, 0.5],
                radius: self.r0,
                bar_half_width: self.r0 / 3.0,
            },
            ShapeKind::Random => ShapeSpec::Random {
                fill: self.fill,
                seed: self.seed,
            },
            ShapeKind::Full => ShapeSpec::Full,
            ShapeKind::Empty => ShapeSpec::Empty,
        };
        // Sampling on a tiny grid runs the shape's own validation.
        mbo_core::sample_shape(&spec, mbo_core::make_grid(self.d, 8)?)?;
        Ok(spec)
    }

    pub fn h(&self) -> f64 {
        self.h[0]
    }

    /// `√h / Δx` for the first step.
    pub fn pinning_ratio(&self) -> f64 {
        self.h().sqrt() * self.n as f64
    }

    /// SHA-256 over the command name and the config, output directory
    /// excluded.
    pub fn hash(&self, command: &str) -> String {
        let mut keyed = self.clone();
        keyed.output_dir = None;
        let body = serde_json::to_string(&keyed).expect("config serializes");
        let digest = Sha256::digest(format!("{command}\n{body}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_keys_match_flags() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"n": 128, "h": 2e-3, "T": 0.01, "R0": 0.2, "K": 2, "shape": "stripe"}"#)
                .unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.h, vec![2e-3]);
        assert_eq!(cfg.t_final, 0.01);
        assert_eq!(cfg.r0, 0.2);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.shape, ShapeKind::Stripe);
        let list: RunConfig = serde_json::from_str(r#"{"h": [4e-3, 2e-3]}"#).unwrap();
        assert_eq!(list.h, vec![4e-3, 2e-3]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"radius": 0.3}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"n": 128, "h": 2e-3, "seed": 9}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            n: Some(64),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.n, 64);
        assert_eq!(cfg.h, vec![2e-3]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn validation_errors() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut cfg = RunConfig::default();
            f(&mut cfg);
            cfg.validate().is_err()
        };
        assert!(bad(|c| c.n = 100));
        assert!(bad(|c| c.h = vec![-1e-3]));
        assert!(bad(|c| c.h.clear()));
        assert!(bad(|c| c.t_final = 0.0));
        assert!(bad(|c| c.r0 = 0.7));
        assert!(bad(|c| c.nodes = 4));
        assert!(bad(|c| c.z_extent = 4.0));
        assert!(bad(|c| c.measure_time = Some(1.0)));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash("run"), b.hash("run"));
        assert_ne!(a.hash("run"), a.hash("interp"));
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash("run"), c.hash("run"));
        assert_eq!(a.hash("run").len(), 64);
    }
}
