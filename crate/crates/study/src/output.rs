//! CSV output with fixed headers.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::Result;

pub const CONVERGENCE_HEADER: [&str; 10] = [
    "level",
    "h",
    "err_h1_bulk",
    "eoc_h1_bulk",
    "err_l2_bulk",
    "eoc_l2_bulk",
    "err_h1_surf",
    "eoc_h1_surf",
    "err_l2_surf",
    "eoc_l2_surf",
];
pub const CONDITION_HEADER: [&str; 5] = ["delta", "kappa", "lambda_min", "lambda_max", "config"];
pub const CONDITION_SCALING_HEADER: [&str; 5] = ["level", "h", "kappa", "lambda_min", "lambda_max"];
pub const GEOMETRY_HEADER: [&str; 3] = ["level", "sup_dist", "sup_normal_dev"];
pub const PROPERTIES_HEADER: [&str; 4] = ["name", "constant", "delta", "pass"];
pub const FAILURES_HEADER: [&str; 2] = ["level", "reason"];

/// Writes `header` and then one line per row; the header is present even without rows.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV back, checking that the header matches and every row has one
/// field per column.
pub fn read_csv_checked(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if found != header {
        return Err(crate::StudyError::Config(format!("unexpected header {found:?} in {}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(rows)
}
