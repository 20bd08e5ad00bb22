//! Uniformly sampled PRB demand series and their on-disk form.
//!
//! A series is stored as two files: a CSV with header `t_index,value` and a
//! JSON sidecar next to it (same stem, `.json` extension) carrying
//! `{start_time_ms, granularity_ms, label, gap_count}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRANULARITY_MS: i64 = 1;
pub const GRANULARITY_MINUTE: i64 = 60_000;
pub const GRANULARITY_HOUR: i64 = 3_600_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrbSeries {
    pub start_time_ms: i64,
    pub granularity_ms: i64,
    pub values: Vec<f64>,
    pub label: String,
    /// Intervals that had no source records and were filled with 0.
    pub gap_count: usize,
}

/// Metadata written next to a series CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub start_time_ms: i64,
    pub granularity_ms: i64,
    pub label: String,
    pub gap_count: usize,
}

impl PrbSeries {
    pub fn new(
        start_time_ms: i64,
        granularity_ms: i64,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let series = PrbSeries {
            start_time_ms,
            granularity_ms,
            values,
            label: label.into(),
            gap_count: 0,
        };
        series.validate()?;
        Ok(series)
    }

    /// Hourly series starting at t=0, mostly for tests and fixtures.
    pub fn from_values(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(0, GRANULARITY_HOUR, values, label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid(format!("series '{}' is empty", self.label)));
        }
        if self.granularity_ms <= 0 {
            return Err(Error::invalid(format!(
                "granularity must be positive, got {}",
                self.granularity_ms
            )));
        }
        if let Some((i, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "series '{}' value {} at index {} is negative or non-finite",
                self.label, v, i
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn sidecar(&self) -> SeriesSidecar {
        SeriesSidecar {
            start_time_ms: self.start_time_ms,
            granularity_ms: self.granularity_ms,
            label: self.label.clone(),
            gap_count: self.gap_count,
        }
    }

    /// Writes `path` (CSV) and its JSON sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["t_index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            wtr.write_record([i.to_string(), v.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;

        let sidecar = serde_json::to_string_pretty(&self.sidecar())?;
        let sidecar_path = sidecar_path(path);
        fs::write(&sidecar_path, sidecar + "\n").map_err(|e| Error::io(sidecar_path, e))
    }

    /// Reads a series CSV and its sidecar. Rows must be in `t_index` order
    /// starting at 0.
    pub fn read(path: &Path) -> Result<Self> {
        let sidecar_path = sidecar_path(path);
        let raw = fs::read_to_string(&sidecar_path).map_err(|e| Error::io(&sidecar_path, e))?;
        let meta: SeriesSidecar = serde_json::from_str(&raw)?;

        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t_index", "value"] {
            return Err(Error::Schema(format!(
                "{}: expected header 't_index,value', found '{}'",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let line = row as u64 + 2;
            let idx: usize = parse_field(&record, 0, line)?;
            if idx != row {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("t_index {idx} out of sequence, expected {row}"),
                });
            }
            values.push(parse_field::<f64>(&record, 1, line)?);
        }
        let series = PrbSeries {
            start_time_ms: meta.start_time_ms,
            granularity_ms: meta.granularity_ms,
            values,
            label: meta.label,
            gap_count: meta.gap_count,
        };
        series.validate()?;
        Ok(series)
    }
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(idx).ok_or_else(|| Error::MalformedRow {
        line,
        reason: format!("missing field {idx}"),
    })?;
    raw.trim().parse().map_err(|e: T::Err| Error::MalformedRow {
        line,
        reason: format!("cannot parse '{raw}': {e}"),
    })
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Population mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let mu = mean(values);
    values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / values.len() as f64
}

pub fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_negative() {
        assert!(PrbSeries::from_values(vec![], "x").is_err());
        assert!(PrbSeries::from_values(vec![1.0, -0.5], "x").is_err());
        assert!(PrbSeries::new(0, 0, vec![1.0], "x").is_err());
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lte.csv");
        let mut s = PrbSeries::new(1_000, GRANULARITY_MINUTE, vec![1.5, 0.0, 22.125], "LTE").unwrap();
        s.gap_count = 1;
        s.write(&path).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_index,value\n0,1.5\n"));
        let back = PrbSeries::read(&path).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn population_moments() {
        assert_eq!(mean(&[1.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 3.0]), 1.0);
        assert_eq!(max(&[1.0, 3.0, 2.0]), 3.0);
    }
}
