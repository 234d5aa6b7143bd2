//! File formats.
//!
//! Matrix files are headerless, comma-delimited CSV with one matrix row per
//! line and every entry written as `{:.16e}` (17 significant digits, `.` as
//! the decimal point), which round-trips every finite `f64` exactly.
//! Manifests and reports are pretty-printed JSON carrying `schema_version`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use tsfactor::linalg::matrix_from_row_major;
use tsfactor::Matrix;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub fn format_entry(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|&x| format_entry(x)))
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a rectangular numeric CSV. Malformed content is an I/O error
/// naming the line.
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        for field in rec.iter() {
            let x: f64 = field.parse().map_err(|_| {
                CliError::io(path, format!("line {}: '{field}' is not a number", line + 1))
            })?;
            data.push(x);
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(CliError::io(
                    path,
                    format!("line {}: expected {c} fields, found {}", line + 1, rec.len()),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| CliError::io(path, "empty matrix file"))?;
    Ok(matrix_from_row_major(rows, cols, &data)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
