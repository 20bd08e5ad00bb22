//! Decoded downlink-control logs to PRB demand series.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PrbSeries;

pub const DCI_COLUMNS: [&str; 7] = [
    "timestamp_ms",
    "sfn",
    "subframe",
    "rnti",
    "prb_count",
    "mcs",
    "dci_format",
];

/// One decoded downlink control message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DciRecord {
    pub timestamp_ms: i64,
    pub sfn: u16,
    pub subframe: u8,
    pub rnti: u32,
    pub prb_count: u32,
    pub mcs: i32,
    pub dci_format: String,
}

impl DciRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.sfn > 1023 {
            return Err(format!("sfn {} outside [0, 1023]", self.sfn));
        }
        if self.subframe > 9 {
            return Err(format!("subframe {} outside [0, 9]", self.subframe));
        }
        if self.dci_format.is_empty() {
            return Err("empty dci_format".into());
        }
        Ok(())
    }
}

/// Parses a DCI log CSV. Records come back in file order; with a filter only
/// matching `dci_format` rows are kept. Column order in the header is free but
/// every column in [`DCI_COLUMNS`] must be present.
pub fn parse_dci_log(path: &Path, format_filter: Option<&str>) -> Result<Vec<DciRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dci_reader(file, format_filter)
}

pub fn parse_dci_reader<R: std::io::Read>(
    reader: R,
    format_filter: Option<&str>,
) -> Result<Vec<DciRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let missing: Vec<_> = DCI_COLUMNS
        .iter()
        .filter(|c| !headers.iter().any(|h| h == **c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing required column(s): {}",
            missing.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
        )));
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let record: DciRecord = row
            .deserialize(Some(&headers))
            .map_err(|e| Error::MalformedRow {
                line,
                reason: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|reason| Error::MalformedRow { line, reason })?;
        if format_filter.is_none_or(|f| record.dci_format == f) {
            out.push(record);
        }
    }
    Ok(out)
}

/// Bins records into intervals of `granularity_ms` and averages `prb_count`.
///
/// The first interval starts at `floor(min timestamp / granularity)`; empty
/// intervals are 0 and counted in `gap_count`.
pub fn to_series(records: &[DciRecord], granularity_ms: i64) -> Result<PrbSeries> {
    if records.is_empty() {
        return Err(Error::invalid("no records to bin"));
    }
    if granularity_ms < 1 {
        return Err(Error::invalid(format!(
            "granularity must be >= 1 ms, got {granularity_ms}"
        )));
    }
    let min_t = records.iter().map(|r| r.timestamp_ms).min().unwrap();
    let max_t = records.iter().map(|r| r.timestamp_ms).max().unwrap();
    let first_bin = min_t.div_euclid(granularity_ms);
    let last_bin = max_t.div_euclid(granularity_ms);
    let n_bins = (last_bin - first_bin + 1) as usize;

    let mut sums = vec![0u64; n_bins];
    let mut counts = vec![0u64; n_bins];
    for r in records {
        let bin = (r.timestamp_ms.div_euclid(granularity_ms) - first_bin) as usize;
        sums[bin] += u64::from(r.prb_count);
        counts[bin] += 1;
    }

    let mut gap_count = 0;
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| {
            if c == 0 {
                gap_count += 1;
                0.0
            } else {
                s as f64 / c as f64
            }
        })
        .collect();

    Ok(PrbSeries {
        start_time_ms: first_bin * granularity_ms,
        granularity_ms,
        values,
        label: "LTE".into(),
        gap_count,
    })
}

/// Averages consecutive windows of `factor` values. A trailing partial window
/// is averaged over its actual length.
pub fn resample(series: &PrbSeries, factor: usize) -> Result<PrbSeries> {
    if factor == 0 {
        return Err(Error::invalid("resample factor must be >= 1"));
    }
    let values = series
        .values
        .chunks(factor)
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect();
    Ok(PrbSeries {
        start_time_ms: series.start_time_ms,
        granularity_ms: series.granularity_ms * factor as i64,
        values,
        label: series.label.clone(),
        gap_count: series.gap_count,
    })
}
