//! Output directory: CSV tables headed by `# config_hash: <sha256>`, JSON
//! reports, snapshots and a `manifest.json` listing all of them.

use std::fmt;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const OUTPUT_ROOT_ENV: &str = "MBO_OUTPUT_ROOT";

/// One CSV cell. Floats print with 17 significant digits so that values
/// read back bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v:.16e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

pub struct OutputDir {
    root: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl OutputDir {
    /// `cfg.output_dir` if set, else `$MBO_OUTPUT_ROOT` (or `mbo-output`)
    /// joined with `<command>-<first 12 hash digits>`.
    pub fn create(cfg: &RunConfig, command: &str) -> anyhow::Result<Self> {
        let hash = cfg.hash(command);
        let root = match &cfg.output_dir {
            Some(dir) => dir.clone(),
            None => {
                let base = std::env::var_os(OUTPUT_ROOT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("mbo-output"));
                base.join(format!("{command}-{}", &hash[..12]))
            }
        };
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root,
            hash,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        let mut file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(file, "# config_hash: {}", self.hash)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)?)
            .with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Registers a file written by someone else (snapshots).
    pub fn record(&mut self, relative: impl Into<String>) {
        self.files.push(relative.into());
    }

    pub fn manifest(&mut self, command: &str, cfg: &RunConfig, status: &str, extra: Value) -> anyhow::Result<PathBuf> {
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.hash,
            "config": cfg,
            "pinning_ratio": cfg.pinning_ratio(),
            "status": status,
            "files": self.files,
            "results": extra,
        });
        let path = self.root.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}

/// A parsed CSV written by [`OutputDir::csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Table> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let first = text.lines().next().unwrap_or_default();
        let config_hash = first
            .strip_prefix("# config_hash: ")
            .with_context(|| format!("{} lacks a config_hash line", path.display()))?
            .to_string();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table {
            config_hash,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> anyhow::Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column {name}"))?;
        self.rows
            .iter()
            .map(|r| r[idx].parse::<f64>().with_context(|| format!("bad value {}", r[idx])))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip_bit_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = Cell::Float(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(Cell::Int(42).to_string(), "42");
        assert!(Cell::Float(f64::NAN).to_string().parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            output_dir: Some(dir.path().to_path_buf()),
            ..RunConfig::default()
        };
        let mut out = OutputDir::create(&cfg, "run").unwrap();
        let rows = vec![
            vec![Cell::from(0usize), Cell::from(0.1 + 0.2)],
            vec![Cell::from(1usize), Cell::from(-1e-17)],
        ];
        let path = out.csv("t.csv", &["step", "value"], &rows).unwrap();
        let table = Table::read(&path).unwrap();
        assert_eq!(table.config_hash, cfg.hash("run"));
        assert_eq!(table.header, vec!["step", "value"]);
        let values = table.column("value").unwrap();
        assert_eq!(values[0].to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(values[1], -1e-17);
        out.manifest("run", &cfg, "ok", Value::Null).unwrap();
        let manifest: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["files"][0], "t.csv");
    }
}
