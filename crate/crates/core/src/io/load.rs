//! Hourly load CSV ingestion.

use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Longest run of consecutive missing steps that interpolation fills.
pub const MAX_INTERPOLATED_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Any missing step is an error.
    #[default]
    Error,
    /// Linear interpolation of interior runs up to three steps long.
    Interpolate,
    /// Trim missing steps at either end; interior gaps are an error.
    DropLeadingTrailing,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "interpolate" => Ok(Self::Interpolate),
            "drop-leading-trailing" | "drop_leading_trailing" => Ok(Self::DropLeadingTrailing),
            _ => Err(Error::invalid(format!("unknown missing-data policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub timestamp_column: String,
    pub value_column: String,
    pub delimiter: u8,
    pub missing: MissingPolicy,
    /// Expected spacing between rows.
    pub step: TimeDelta,
    /// Reject zero and negative loads.
    pub require_positive: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            value_column: "load_mw".into(),
            delimiter: b',',
            missing: MissingPolicy::Error,
            step: TimeDelta::hours(1),
            require_positive: true,
        }
    }
}

/// Where the data came from: enough to identify the exact input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub rows: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome {
    pub series: TimeSeries,
    /// Series indices whose values were interpolated.
    pub interpolated: Vec<usize>,
    pub dropped_leading: usize,
    pub dropped_trailing: usize,
    pub digest: InputDigest,
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}

fn is_missing(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

fn csv_error(line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        line,
        message: message.into(),
    }
}

/// Reads `timestamp,value` rows onto a regular grid, applying the missing-data
/// policy to empty values and to skipped timestamps alike.
pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    let step = options.step;
    if step <= TimeDelta::zero() {
        return Err(Error::invalid("time step must be positive"));
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| csv_error(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| csv_error(1, format!("header has no column {name:?}")))
    };
    let ts_col = column(&options.timestamp_column)?;
    let val_col = column(&options.value_column)?;

    // one slot per grid step; None marks a missing value
    let mut slots: Vec<Option<f64>> = Vec::new();
    let mut slot_lines: Vec<u64> = Vec::new();
    let mut start: Option<DateTime<Utc>> = None;
    let mut last: Option<DateTime<Utc>> = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows += 1;
        let raw_ts = record
            .get(ts_col)
            .ok_or_else(|| csv_error(line, "missing timestamp field"))?;
        let ts = parse_timestamp(raw_ts)
            .ok_or_else(|| csv_error(line, format!("unparseable timestamp {raw_ts:?}")))?;
        let raw_val = record
            .get(val_col)
            .ok_or_else(|| csv_error(line, "missing value field"))?;
        let value = if is_missing(raw_val) {
            None
        } else {
            let v: f64 = raw_val
                .trim()
                .parse()
                .map_err(|_| csv_error(line, format!("unparseable value {raw_val:?}")))?;
            if !v.is_finite() {
                return Err(csv_error(line, format!("non-finite value {raw_val:?}")));
            }
            if options.require_positive && v <= 0.0 {
                return Err(csv_error(line, format!("non-positive load {v}")));
            }
            Some(v)
        };

        if let Some(prev) = last {
            if ts == prev {
                return Err(csv_error(line, format!("duplicate timestamp {raw_ts}")));
            }
            if ts < prev {
                return Err(csv_error(
                    line,
                    format!("timestamp {raw_ts} is earlier than the previous row"),
                ));
            }
            let gap = ts - prev;
            let gap_steps = gap.num_milliseconds() / step.num_milliseconds();
            if gap_steps * step.num_milliseconds() != gap.num_milliseconds() {
                return Err(csv_error(
                    line,
                    format!("timestamp {raw_ts} is off the {}s grid", step.num_seconds()),
                ));
            }
            for _ in 1..gap_steps {
                slots.push(None);
                slot_lines.push(line);
            }
        } else {
            start = Some(ts);
        }
        slots.push(value);
        slot_lines.push(line);
        last = Some(ts);
    }
    let (Some(mut start), Some(_)) = (start, last) else {
        return Err(csv_error(1, "no data rows"));
    };

    let first = slots.iter().position(Option::is_some);
    let Some(first) = first else {
        return Err(csv_error(1, "every value is missing"));
    };
    let end_idx = slots.iter().rposition(Option::is_some).unwrap_or(first);
    let (mut dropped_leading, mut dropped_trailing) = (0, 0);
    match options.missing {
        MissingPolicy::DropLeadingTrailing => {
            dropped_leading = first;
            dropped_trailing = slots.len() - 1 - end_idx;
            slots.truncate(end_idx + 1);
            slots.drain(..first);
            slot_lines.truncate(end_idx + 1);
            slot_lines.drain(..first);
            start += step * first as i32;
        }
        _ if first > 0 || end_idx + 1 < slots.len() => {
            let i = if first > 0 { 0 } else { end_idx + 1 };
            return Err(csv_error(
                slot_lines[i],
                "missing value at the edge of the series",
            ));
        }
        _ => {}
    }

    let mut interpolated = Vec::new();
    let mut i = 0;
    while i < slots.len() {
        if slots[i].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while slots[i].is_none() {
            i += 1;
        }
        let run = i - run_start;
        let line = slot_lines[run_start];
        match options.missing {
            MissingPolicy::Interpolate if run <= MAX_INTERPOLATED_RUN => {
                let a = slots[run_start - 1].unwrap();
                let b = slots[i].unwrap();
                for j in 0..run {
                    let w = (j + 1) as f64 / (run + 1) as f64;
                    slots[run_start + j] = Some(a + w * (b - a));
                    interpolated.push(run_start + j);
                }
            }
            MissingPolicy::Interpolate => {
                return Err(csv_error(
                    line,
                    format!("gap of {run} steps exceeds the interpolation limit of {MAX_INTERPOLATED_RUN}"),
                ));
            }
            _ => return Err(csv_error(line, format!("gap of {run} missing step(s)"))),
        }
    }

    let values: Vec<f64> = slots.into_iter().map(|v| v.unwrap()).collect();
    let series = TimeSeries::new(values, start, step)?;
    let digest = InputDigest {
        path: path.display().to_string(),
        rows,
        start: series.start(),
        end: series.end(),
        sha256,
    };
    Ok(LoadOutcome {
        series,
        interpolated,
        dropped_leading,
        dropped_trailing,
        digest,
    })
}

/// Writes a series as `timestamp,<value_column>` with RFC 3339 timestamps.
pub fn write_series_csv(
    series: &TimeSeries,
    value_column: &str,
    dest: impl AsRef<Path>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(dest).map_err(|e| csv_error(0, e.to_string()))?;
    let io = |e: csv::Error| csv_error(0, e.to_string());
    w.write_record(["timestamp", value_column]).map_err(io)?;
    for (i, v) in series.values().iter().enumerate() {
        w.write_record([super::format_timestamp(series.timestamp(i)), v.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
