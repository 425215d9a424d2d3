//! Loader for the CSV series format: a header row, a date column in
//! YYYY-MM-DD, one column per series, empty cell = missing.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use impact_bsts::series::{DateIndexedSeries, SeriesError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("no `{0}` column in header")]
    MissingDateColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("file has a header but no data rows")]
    NoRows,
    #[error("row {row}: cannot parse date `{value}`")]
    BadDate { row: usize, value: String },
    #[error("row {row}: expected {expected}, found {found} (dates must be consecutive days)")]
    NonContiguousDates {
        row: usize,
        expected: NaiveDate,
        found: NaiveDate,
    },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    UnparseableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub fn load_csv(path: impl AsRef<Path>, date_column: &str) -> Result<Vec<DateIndexedSeries>, CsvError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, date_column)
}

/// Parses every non-date column into a series. Rows are numbered from 1,
/// counting data rows only.
pub fn read_csv<R: Read>(reader: R, date_column: &str) -> Result<Vec<DateIndexedSeries>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h) {
            return Err(CsvError::DuplicateColumn(h.to_string()));
        }
    }
    let date_idx = headers
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| CsvError::MissingDateColumn(date_column.to_string()))?;
    let columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != date_idx)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut start = None;
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); columns.len()];
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row = k + 1;
        let raw = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| CsvError::BadDate {
            row,
            value: raw.to_string(),
        })?;
        let first = *start.get_or_insert(date);
        let expected = first + Duration::days(k as i64);
        if date != expected {
            return Err(CsvError::NonContiguousDates {
                row,
                expected,
                found: date,
            });
        }
        for ((idx, name), out) in columns.iter().zip(values.iter_mut()) {
            let cell = record.get(*idx).unwrap_or("");
            if cell.is_empty() {
                out.push(None);
                continue;
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                CsvError::UnparseableValue {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                }
            })?;
            out.push(Some(v));
        }
    }
    let start = start.ok_or(CsvError::NoRows)?;
    columns
        .into_iter()
        .zip(values)
        .map(|((_, name), v)| Ok(DateIndexedSeries::new(name, start, v)?))
        .collect()
}
