use std::path::Path;

use super::{format_sig9, format_timestamp};
use crate::error::{Error, Result};
use crate::regime::{classify_regimes, ProbabilityPath, ProbabilitySource};
use crate::series::TimeSeries;

/// Plot-ready CSV: `timestamp, regime_j_filtered…, regime_j_smoothed…,
/// map_regime`, one row per filtered step (the first `p` observations only
/// condition the filter and have no row).
pub fn export_probabilities(
    path: &ProbabilityPath,
    series: &TimeSeries,
    dest: impl AsRef<Path>,
) -> Result<()> {
    let mut out = Vec::new();
    write_probabilities(path, series, &mut out)?;
    std::fs::write(dest, out)?;
    Ok(())
}

pub fn write_probabilities(
    path: &ProbabilityPath,
    series: &TimeSeries,
    out: &mut impl std::io::Write,
) -> Result<()> {
    if path.offset + path.len() != series.len() {
        return Err(Error::Alignment(format!(
            "probability path covers {} steps from offset {}, series has {}",
            path.len(),
            path.offset,
            series.len()
        )));
    }
    let filtered = path.filtered_marginals();
    let smoothed = path
        .smoothed_marginals()
        .ok_or_else(|| Error::invalid("smoothed probabilities have not been computed"))?;
    let map = classify_regimes(path, ProbabilitySource::Smoothed)?;
    let k = path.n_regimes;

    let mut header = vec!["timestamp".to_string()];
    header.extend((1..=k).map(|j| format!("regime_{j}_filtered")));
    header.extend((1..=k).map(|j| format!("regime_{j}_smoothed")));
    header.push("map_regime".into());
    writeln!(out, "{}", header.join(","))?;
    for tau in 0..path.len() {
        let mut row = vec![format_timestamp(series.timestamp(path.offset + tau))];
        row.extend(filtered[tau].iter().map(|&v| format_sig9(v)));
        row.extend(smoothed[tau].iter().map(|&v| format_sig9(v)));
        row.push(map.labels[tau].to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
