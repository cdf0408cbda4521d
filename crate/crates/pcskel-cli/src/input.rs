//! File ingestion and emission: dataset CSVs and weight-matrix files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pcskel::{Dataset, WeightedDag};

use crate::CliError;

/// Reads a whole file, tagging failures with the path (exit 2).
pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|err| CliError::Input(format!("could not read {}: {err}", path.display())))
}

/// Writes a whole file, tagging failures with the path (exit 2).
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|err| CliError::Input(format!("could not write {}: {err}", path.display())))
}

/// Parses a dataset CSV: one observation per line, comma-separated columns.
///
/// If any field of the first non-empty line fails to parse as a number, the
/// line is taken as a header and skipped. Every remaining line must hold the
/// same count of finite values ("." decimal separator, scientific notation
/// accepted). Error positions are 1-indexed over data rows.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset, CliError> {
    let text = read_file(path)?;
    parse_dataset_csv(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

fn parse_dataset_csv(text: &str) -> Result<Dataset, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut saw_first = false;
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let first = !saw_first;
        saw_first = true;
        if first && fields.iter().any(|f| f.trim().parse::<f64>().is_err()) {
            continue; // header line
        }
        let mut row = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                format!(
                    "data row {}, column {} is not a number: {:?}",
                    rows.len() + 1,
                    col + 1,
                    field.trim()
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    // from_rows re-checks shape and finiteness with 1-indexed positions.
    Dataset::from_rows(rows).map_err(|err| err.to_string())
}

/// Parses a weight matrix: p lines of p space-separated reals, zero on and
/// above the diagonal. The line count fixes p.
pub fn read_weights_file(path: &Path) -> Result<WeightedDag, CliError> {
    let text = read_file(path)?;
    parse_weights(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

fn parse_weights(text: &str) -> Result<WeightedDag, String> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let p = lines.len();
    if p == 0 {
        return Err("weight matrix file is empty".to_string());
    }
    let mut values = Vec::with_capacity(p * p);
    for (row, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != p {
            return Err(format!(
                "row {} has {} fields, expected {p} (a square matrix, one line per vertex)",
                row + 1,
                fields.len()
            ));
        }
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                format!(
                    "row {}, column {} is not a number: {field:?}",
                    row + 1,
                    col + 1
                )
            })?;
            values.push(value);
        }
    }
    WeightedDag::new(p, values).map_err(|err| err.to_string())
}

/// Renders a weight matrix as p lines of p space-separated reals. Values
/// print in shortest round-trip form, so re-parsing recovers the exact
/// doubles.
pub fn format_weights(dag: &WeightedDag) -> String {
    let mut out = String::new();
    for row in dag.rows() {
        for (col, value) in row.iter().enumerate() {
            if col > 0 {
                out.push(' ');
            }
            write!(out, "{value}").expect("string formatting cannot fail");
        }
        out.push('\n');
    }
    out
}
