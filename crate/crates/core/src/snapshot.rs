//! Field snapshots: a little-endian `f64` raster (`<stem>.bin`, row-major,
//! axis 0 slowest) next to a JSON sidecar (`<stem>.json`) holding
//! `{d, n, name, time}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub d: usize,
    pub n: usize,
    pub name: String,
    pub time: f64,
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_snapshot(
    stem: &Path,
    field: &ScalarField,
    name: &str,
    time: f64,
) -> Result<(PathBuf, PathBuf)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let meta = SnapshotMeta {
        d: field.grid().dim(),
        n: field.grid().n(),
        name: name.to_string(),
        time,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&json, text)?;
    Ok((bin, json))
}

pub fn read_snapshot(stem: &Path) -> Result<(ScalarField, SnapshotMeta)> {
    let text = fs::read_to_string(stem.with_extension("json"))?;
    let meta: SnapshotMeta = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    let grid = GridSpec::toy(meta.d, meta.n)?;
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() != grid.len() * 8 {
        return Err(Error::SizeMismatch {
            expected: grid.len() * 8,
            actual: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((ScalarField::new(grid, values)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_grid;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(2, 16).unwrap();
        let f = ScalarField::random_unit(g, 11);
        let stem = dir.path().join("chi_0003");
        write_snapshot(&stem, &f, "chi", 0.003).unwrap();
        let (back, meta) = read_snapshot(&stem).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta.d, 2);
        assert_eq!(meta.n, 16);
        assert_eq!(meta.time, 0.003);
        let raw = std::fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(raw.len(), 256 * 8);
        assert_eq!(&raw[..8], &f.values()[0].to_le_bytes());
    }
}
