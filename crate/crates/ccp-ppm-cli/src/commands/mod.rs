//! Subcommand implementations.

pub mod fit;
pub mod probe;
pub mod simulate;
pub mod summarize;
pub mod tune;

use std::path::Path;

use ccp_ppm::SeriesData;

use crate::errors::{CliError, CliResult};

/// Writes the (standardized) series as `time,name1,...,nameL` with
/// full-precision values, so that fits are re-summarizable offline.
pub(crate) fn render_data_csv(data: &[SeriesData]) -> String {
    let mut out = String::from("time");
    for s in data {
        out.push(',');
        out.push_str(s.name());
    }
    out.push('\n');
    let n = data[0].len();
    for t in 0..n {
        out.push_str(&(t + 1).to_string());
        for s in data {
            out.push(',');
            out.push_str(&s.values()[t].to_string());
        }
        out.push('\n');
    }
    out
}

/// Reads a `data.csv` written by [`render_data_csv`].
pub(crate) fn read_data_csv(path: &Path) -> CliResult<Vec<SeriesData>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{}: empty file", path.display())))?;
    let names: Vec<&str> = header.split(',').skip(1).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let _time = fields.next();
        for (col, field) in fields.enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::data(format!(
                    "{}: bad value '{field}' at row {}",
                    path.display(),
                    idx + 1
                ))
            })?;
            if col < columns.len() {
                columns[col].push(value);
            }
        }
    }
    names
        .iter()
        .zip(columns)
        .map(|(name, values)| {
            SeriesData::new(*name, values)
                .map(SeriesData::assume_standardized)
                .map_err(CliError::data)
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub(crate) fn to_json_bytes<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::data(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}
