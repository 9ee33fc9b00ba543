//! File formats: newline-delimited JSON for datasets, predictions, and
//! queries; hand-emitted JSON and CSV for reports.
//!
//! All floats are serialized with 17 significant digits (`{:.16e}`), which
//! round-trips doubles exactly and keeps outputs byte-identical across runs.
//! In JSON, infinities become the strings `"inf"` / `"-inf"` and NaN becomes
//! `null`; CSV uses bare `inf` / `-inf` / `nan` tokens.

use crate::{CliError, CliResult};
use congruence::distributions::PredictiveDistribution;
use serde::Deserialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn fmt_float_json(v: f64) -> String {
    if v.is_nan() {
        "null".to_string()
    } else if v == f64::INFINITY {
        "\"inf\"".to_string()
    } else if v == f64::NEG_INFINITY {
        "\"-inf\"".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_float_csv(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn json_float_array(vals: &[f64]) -> String {
    let items: Vec<String> = vals.iter().map(|&v| fmt_float_json(v)).collect();
    format!("[{}]", items.join(","))
}

fn vector_json(x: &[f64]) -> String {
    json_float_array(x)
}

#[derive(Deserialize)]
struct DatasetRow {
    x: Vec<f64>,
    y: f64,
}

#[derive(Deserialize)]
struct PredictionRow {
    x: Vec<f64>,
    family: String,
    params: Vec<f64>,
}

#[derive(Deserialize)]
struct QueryRow {
    x: Vec<f64>,
}

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{}: {}", path.display(), line, msg))
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e)))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| data_err(path, idx + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: T = serde_json::from_str(&line).map_err(|e| data_err(path, idx + 1, e))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no rows", path.display())));
    }
    Ok(rows)
}

/// Reads a dataset file of `{"x": [...], "y": ...}` rows.
pub fn read_dataset(path: &Path) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let rows: Vec<DatasetRow> = read_rows(path)?;
    Ok(rows.into_iter().map(|r| (r.x, r.y)).unzip())
}

/// Reads a predictions file of `{"x": [...], "family": "...", "params": [...]}` rows.
pub fn read_predictions(path: &Path) -> CliResult<(Vec<Vec<f64>>, Vec<PredictiveDistribution>)> {
    let rows: Vec<PredictionRow> = read_rows(path)?;
    let mut xs = Vec::with_capacity(rows.len());
    let mut dists = Vec::with_capacity(rows.len());
    for (idx, row) in rows.into_iter().enumerate() {
        let dist = PredictiveDistribution::from_params(&row.family, &row.params)
            .map_err(|e| data_err(path, idx + 1, e))?;
        xs.push(row.x);
        dists.push(dist);
    }
    Ok((xs, dists))
}

/// Reads a queries file of `{"x": [...]}` rows.
pub fn read_queries(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let rows: Vec<QueryRow> = read_rows(path)?;
    Ok(rows.into_iter().map(|r| r.x).collect())
}

pub fn write_dataset(path: &Path, xs: &[Vec<f64>], ys: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (x, &y) in xs.iter().zip(ys) {
        writeln!(w, "{{\"x\":{},\"y\":{}}}", vector_json(x), fmt_float_json(y))?;
    }
    Ok(())
}

pub fn write_predictions(
    path: &Path,
    xs: &[Vec<f64>],
    dists: &[PredictiveDistribution],
) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (x, d) in xs.iter().zip(dists) {
        writeln!(
            w,
            "{{\"x\":{},\"family\":{},\"params\":{}}}",
            vector_json(x),
            json_string(d.family_name()),
            json_float_array(&d.params()),
        )?;
    }
    Ok(())
}

/// Writes a CSV with a header row; every cell is already formatted.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
