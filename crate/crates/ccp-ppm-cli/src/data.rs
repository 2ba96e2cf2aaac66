//! CSV ingestion and return computation.
//!
//! Two layouts are accepted: wide (one numeric column per series, with
//! an optional date column) and long (`date,series,value`). Either way
//! the result is a set of aligned series of equal length; any missing
//! cell or missing (date, series) combination is an error that names
//! the offending location rather than being silently imputed.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use ccp_ppm::SeriesData;

use crate::config::{DateFormat, InputConfig, InputFormat, InputMode};
use crate::errors::{CliError, CliResult};

/// Simple returns `R_t = (P_t - P_{t-1}) / P_{t-1}`.
///
/// Prices must be strictly positive.
pub fn returns_from_prices(prices: &[f64]) -> CliResult<Vec<f64>> {
    if prices.len() < 2 {
        return Err(CliError::data(format!(
            "need at least 2 prices to compute returns, got {}",
            prices.len()
        )));
    }
    if let Some((idx, bad)) = prices.iter().enumerate().find(|(_, p)| **p <= 0.0) {
        return Err(CliError::data(format!(
            "non-positive price {bad} at row {}",
            idx + 1
        )));
    }
    Ok(prices
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0])
        .collect())
}

/// Converts a price series into its return series (length `n - 1`).
pub fn compute_returns(prices: &SeriesData) -> CliResult<SeriesData> {
    let r = returns_from_prices(prices.values())?;
    SeriesData::new(prices.name(), r).map_err(CliError::data)
}

fn parse_date(raw: &str, format: DateFormat) -> CliResult<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), format.pattern())
        .map_err(|e| CliError::data(format!("cannot parse date '{raw}': {e}")))
}

fn parse_value(raw: &str, series: &str, row: usize) -> CliResult<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(CliError::data(format!(
            "missing value for series '{series}' at data row {row}"
        )));
    }
    trimmed.parse::<f64>().map_err(|_| {
        CliError::data(format!(
            "unparseable value '{raw}' for series '{series}' at data row {row}"
        ))
    })
}

fn read_wide(path: &Path, cfg: &InputConfig) -> CliResult<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let date_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(&cfg.date_column));
    let series_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(idx, _)| Some(*idx) != date_idx)
        .map(|(idx, name)| (idx, name.clone()))
        .collect();
    if series_cols.is_empty() {
        return Err(CliError::data(format!(
            "{}: no series columns found",
            path.display()
        )));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); series_cols.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let row = row_idx + 1;
        if let Some(didx) = date_idx {
            let raw = record.get(didx).unwrap_or("");
            parse_date(raw, cfg.date_format)?;
        }
        for (col, (idx, name)) in series_cols.iter().enumerate() {
            let raw = record.get(*idx).ok_or_else(|| {
                CliError::data(format!(
                    "missing value for series '{name}' at data row {row}"
                ))
            })?;
            columns[col].push(parse_value(raw, name, row)?);
        }
    }
    Ok(series_cols
        .into_iter()
        .map(|(_, name)| name)
        .zip(columns)
        .collect())
}

fn read_long(path: &Path, cfg: &InputConfig) -> CliResult<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    let col = |name: &str| -> CliResult<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::data(format!(
                "{}: long format needs a '{name}' column",
                path.display()
            ))
        })
    };
    let (dcol, scol, vcol) = (col("date")?, col("series")?, col("value")?);

    let mut series_order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(NaiveDate, String), f64> = BTreeMap::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let row = row_idx + 1;
        let date = parse_date(record.get(dcol).unwrap_or(""), cfg.date_format)?;
        let series = record.get(scol).unwrap_or("").trim().to_string();
        if series.is_empty() {
            return Err(CliError::data(format!(
                "{}: empty series name at data row {row}",
                path.display()
            )));
        }
        let value = parse_value(record.get(vcol).unwrap_or(""), &series, row)?;
        if !series_order.contains(&series) {
            series_order.push(series.clone());
        }
        if !dates.contains(&date) {
            dates.push(date);
        }
        if cells.insert((date, series.clone()), value).is_some() {
            return Err(CliError::data(format!(
                "{}: duplicate entry for series '{series}' on {date}",
                path.display()
            )));
        }
    }
    dates.sort_unstable();

    // Every (date, series) combination must exist.
    let mut gaps = Vec::new();
    for date in &dates {
        for series in &series_order {
            if !cells.contains_key(&(*date, series.clone())) {
                gaps.push(format!("({date}, {series})"));
            }
        }
    }
    if !gaps.is_empty() {
        let shown = gaps.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
        let suffix = if gaps.len() > 10 {
            format!(" and {} more", gaps.len() - 10)
        } else {
            String::new()
        };
        return Err(CliError::data(format!(
            "{}: missing observations for {shown}{suffix}",
            path.display()
        )));
    }

    Ok(series_order
        .into_iter()
        .map(|name| {
            let values = dates
                .iter()
                .map(|d| cells[&(*d, name.clone())])
                .collect();
            (name, values)
        })
        .collect())
}

/// Loads every configured path and returns aligned series, converting
/// prices to returns when the input mode asks for it.
pub fn load_series(cfg: &InputConfig) -> CliResult<Vec<SeriesData>> {
    if cfg.paths.is_empty() {
        return Err(CliError::config(
            "no input paths configured (input.paths)".to_string(),
        ));
    }
    let mut out: Vec<SeriesData> = Vec::new();
    for path in &cfg.paths {
        let raw = match cfg.format {
            InputFormat::Wide => read_wide(path, cfg)?,
            InputFormat::Long => read_long(path, cfg)?,
        };
        for (name, values) in raw {
            let series = SeriesData::new(name, values).map_err(CliError::data)?;
            let series = match cfg.mode {
                InputMode::Prices => compute_returns(&series)?,
                InputMode::Returns => series,
            };
            out.push(series);
        }
    }
    let n = out[0].len();
    if let Some(bad) = out.iter().find(|s| s.len() != n) {
        return Err(CliError::data(format!(
            "series '{}' has length {} but '{}' has {n}; series must align",
            bad.name(),
            bad.len(),
            out[0].name()
        )));
    }
    Ok(out)
}
