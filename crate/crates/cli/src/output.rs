//! Output plumbing: atomic file writes, CSV text, content hashes.
//!
//! All numeric CSV text uses Rust's shortest round-trip decimal formatting,
//! so written values parse back bit-identically.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Writes through a temp file in the target directory plus rename, so a
/// crash or a concurrent reader never observes a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|byte| format!("{byte:02x}")).collect()
}

/// `x0,x1,...,x{m-1}`.
pub fn ambient_header(m: usize) -> String {
    (0..m).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

/// One CSV row, '\n'-terminated.
pub fn csv_row(values: &[f64]) -> String {
    let mut row = String::new();
    for (i, value) in values.iter().enumerate() {
        if i > 0 {
            row.push(',');
        }
        row.push_str(&format!("{value}"));
    }
    row.push('\n');
    row
}

/// Parses a points CSV whose header must start with `x0,...,x{m-1}`; extra
/// columns (such as a `log_density` column from the sample command) are
/// ignored.  Returns the first `m` columns of every data row.  Offending
/// rows are listed by 1-based data-row number, header excluded.
pub fn read_points_csv(text: &str, m: usize) -> Result<Vec<Vec<f64>>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| "input CSV is empty".to_string())?;
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let expected = ambient_header(m);
    if fields.len() < m || fields[..m].join(",") != expected {
        return Err(format!("input CSV header must start with {expected:?}, got {header:?}"));
    }
    let width = fields.len();

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    let mut reason = String::new();
    let flag = |bad: &mut Vec<usize>, reason: &mut String, row: usize, why: String| {
        if bad.is_empty() {
            *reason = why;
        }
        bad.push(row);
    };
    for (i, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if line.is_empty() || cells.len() != width {
            flag(&mut bad, &mut reason, row, format!("expected {width} columns, got {}", cells.len()));
            continue;
        }
        let mut coords = Vec::with_capacity(m);
        for cell in &cells[..m] {
            match cell.trim().parse::<f64>() {
                Ok(value) => coords.push(value),
                Err(_) => {
                    flag(&mut bad, &mut reason, row, format!("{cell:?} is not a number"));
                    break;
                }
            }
        }
        if coords.len() == m {
            rows.push(coords);
        }
    }
    if !bad.is_empty() {
        return Err(format!("invalid data rows {bad:?} (1-based, header excluded): {reason}"));
    }
    if rows.is_empty() {
        return Err("input CSV has no data rows".into());
    }
    Ok(rows)
}
