//! Plain-text file formats: headerless numeric CSV for matrices, pretty JSON
//! for result documents.

use crate::error::{AppError, Result};
use scca_core::{Matrix, Vector};
use serde::{de::DeserializeOwned, Serialize};
use std::fs;
use std::path::Path;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> AppError {
    AppError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a comma-separated matrix, one sample per row, no header.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(format_err(
                    path,
                    format!("row {} has {} fields, expected {c}", r + 1, record.len()),
                ))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                format_err(path, format!("row {}, column {}: `{field}` is not a number", r + 1, c + 1))
            })?;
            if !v.is_finite() {
                return Err(format_err(path, format!("row {}, column {}: non-finite value", r + 1, c + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| format_err(path, "empty matrix"))?;
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

/// Writes `m` row by row. Values use the shortest representation that
/// round-trips, so output is byte-stable.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 20);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&m[(r, c)].to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

/// Serializes rows with a header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| format_err(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| format_err(path, e.to_string()))?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn to_vec(v: &Vector) -> Vec<f64> {
    v.as_slice().to_vec()
}
