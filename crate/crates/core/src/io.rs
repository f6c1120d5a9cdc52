//! File output (CSV matrices and tables, JSON sidecars, run manifests) and
//! the fit-data CSV reader.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Matrix CSV: one row per signal index, plain shortest-round-trip decimal
/// numbers, no header (axes live in the JSON sidecar).
pub fn write_matrix_csv(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    debug_assert_eq!(rows * cols, data.len());
    let mut out = String::with_capacity(data.len() * 20);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            push_f64(&mut out, data[r * cols + c]);
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// |ψ|² of a complex amplitude matrix.
pub fn jsi_of(amplitude: &[Complex64]) -> Vec<f64> {
    amplitude.iter().map(|z| z.norm_sqr()).collect()
}

/// Table CSV with a header row naming each column.
pub fn write_table_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), headers.len());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_f64(&mut out, *v);
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Pretty-printed JSON sidecar.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Data(format!("json serialization: {e}")))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn push_f64(out: &mut String, v: f64) {
    use std::fmt::Write as _;
    // Rust's Display for f64 prints the shortest representation that
    // round-trips, which keeps CSV output byte-deterministic.
    let _ = write!(out, "{v}");
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Serializable view of grid axes for JSON sidecars.
#[derive(serde::Serialize)]
pub struct GridAxes {
    pub omega_s_rad_s: Vec<f64>,
    pub omega_i_rad_s: Vec<f64>,
    pub lambda_s_m: Vec<f64>,
    pub lambda_i_m: Vec<f64>,
}

impl GridAxes {
    pub fn of(grid: &FrequencyGrid) -> Self {
        GridAxes {
            omega_s_rad_s: grid.omega_s.clone(),
            omega_i_rad_s: grid.omega_i.clone(),
            lambda_s_m: grid
                .omega_s
                .iter()
                .map(|&w| crate::constants::wavelength_of_omega(w))
                .collect(),
            lambda_i_m: grid
                .omega_i
                .iter()
                .map(|&w| crate::constants::wavelength_of_omega(w))
                .collect(),
        }
    }
}

/// Two- or three-column (x, y[, sigma]) CSV for the fitters. Lines starting
/// with `#` and an optional non-numeric header line are skipped. Never
/// panics on malformed input.
pub fn parse_xy_csv(text: &str) -> Result<Vec<(f64, f64, Option<f64>)>> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Data(format!(
                "line {}: expected 2 or 3 comma-separated columns, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parsed: Vec<std::result::Result<f64, _>> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        if parsed.iter().any(|p| p.is_err()) {
            if rows.is_empty() {
                // tolerate a single header line before any data
                continue;
            }
            return Err(Error::Data(format!("line {}: non-numeric field", lineno + 1)));
        }
        let vals: Vec<f64> = parsed.into_iter().map(|p| p.unwrap()).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("line {}: non-finite value", lineno + 1)));
        }
        rows.push((vals[0], vals[1], vals.get(2).copied()));
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows found".into()));
    }
    Ok(rows)
}

/// Run provenance written next to every command's outputs.
#[derive(serde::Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<String>,
    pub resolved_config_toml: String,
}

impl RunManifest {
    pub fn begin(command: &str, resolved_config_toml: String, seed: u64) -> Self {
        RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(resolved_config_toml.as_bytes()),
            seed,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
            resolved_config_toml,
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix_ms = now_ms();
        let path = dir.join("manifest.json");
        write_json(&path, &self)?;
        Ok(path)
    }
}

fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}
