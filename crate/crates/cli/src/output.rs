//! Artifact files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use qws_core::linalg::CMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: Option<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    /// Tolerances actually achieved, per stage.
    pub tolerances: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
}

/// Collects artifacts written to one output directory.
pub struct Run {
    dir: PathBuf,
    command: String,
    scenario: Option<String>,
    seed: Option<u64>,
    started: Instant,
    tolerances: BTreeMap<String, f64>,
    artifacts: Vec<Artifact>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, scenario: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_owned(),
            scenario: scenario.map(|p| p.display().to_string()),
            seed,
            started: Instant::now(),
            tolerances: BTreeMap::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_owned(), value);
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact {
            path: name.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with a header row from serializable records.
    pub fn write_records<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        self.write_bytes(name, &bytes)
    }

    /// Complex matrix as (row, col, re, im) records.
    pub fn write_complex_matrix(&mut self, name: &str, m: &CMatrix) -> Result<()> {
        #[derive(Serialize)]
        struct Entry {
            row: usize,
            col: usize,
            re: f64,
            im: f64,
        }
        let rows: Vec<Entry> = (0..m.nrows())
            .flat_map(|row| {
                (0..m.ncols()).map(move |col| Entry {
                    row,
                    col,
                    re: m[(row, col)].re,
                    im: m[(row, col)].im,
                })
            })
            .collect();
        self.write_records(name, &rows)
    }

    /// Real grid, one CSV line per y row (bottom row first), no header.
    pub fn write_grid(&mut self, name: &str, values: &DMatrix<f64>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in 0..values.nrows() {
            w.write_record(values.row(r).iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        self.write_bytes(name, &bytes)
    }

    /// 8-bit grayscale image scaled to the grid maximum, largest y on top.
    pub fn write_png(&mut self, name: &str, values: &DMatrix<f64>) -> Result<()> {
        let (ny, nx) = values.shape();
        let max = values.iter().cloned().fold(0.0, f64::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let img = image::GrayImage::from_fn(nx as u32, ny as u32, |x, y| {
            let v = values[(ny - 1 - y as usize, x as usize)];
            image::Luma([(v * scale).round().clamp(0.0, 255.0) as u8])
        });
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            scenario: self.scenario,
            output_dir: self.dir.display().to_string(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            tolerances: self.tolerances,
            artifacts: self.artifacts,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
