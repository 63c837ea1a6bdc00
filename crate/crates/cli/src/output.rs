//! Deterministic file output: 17-significant-digit floats, nested grids and
//! atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Log-spaced grid; the i-th exponent is `log10(lo) + i·step`, so doubling
/// the density (2n − 1 points) reproduces every existing point bitwise.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let a = lo.log10();
    let step = (hi.log10() - a) / (n - 1) as f64;
    (0..n).map(|i| 10f64.powf(a + i as f64 * step)).collect()
}

/// Linear grid with the same nesting property as [`log_grid`].
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// CSV text: `#`-prefixed metadata lines, then a header and float rows.
pub struct CsvTable {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.comments.push(format!("# {key} = {value}"));
        self
    }

    pub fn row(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn text_row(&mut self, values: Vec<String>) {
        self.rows.push(values);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::config(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::config(format!("csv encoding: {e}")))
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::config(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_csv(path: &Path, table: &CsvTable) -> CliResult<()> {
    write_atomic(path, &table.to_bytes()?)
}

#[derive(Debug, Deserialize)]
struct PsdRow {
    f_hz: f64,
    psd_value: f64,
}

/// Reads a PSD table with header `f_hz,psd_value`; `#` lines are comments.
pub fn read_psd_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Parse {
            path: PathBuf::from(path),
            message: e.to_string(),
        })?;
    let mut f = Vec::new();
    let mut s = Vec::new();
    for row in reader.deserialize::<PsdRow>() {
        let row = row.map_err(|e| CliError::Parse {
            path: PathBuf::from(path),
            message: e.to_string(),
        })?;
        f.push(row.f_hz);
        s.push(row.psd_value);
    }
    Ok((f, s))
}
