//! Hourly series container, descriptive statistics, correlograms and the
//! deterministic hour-of-cycle seasonal component.
//!
//! A load series is modelled as `L(t) = L~(t) + C(t)` where `C` is a periodic
//! profile estimated by per-position means. [`deseasonalize`] removes it and
//! [`reseasonalize`] adds it back.

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered finite observations on a regular time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: DateTime<Utc>,
    step: TimeDelta,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, start: DateTime<Utc>, step: TimeDelta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData {
                what: "time series",
                needed: 1,
                got: 0,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if step <= TimeDelta::zero() {
            return Err(Error::invalid("time step must be positive"));
        }
        Ok(Self {
            values,
            start,
            step,
        })
    }

    /// Hourly series anchored at the Unix epoch.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, DateTime::UNIX_EPOCH, TimeDelta::hours(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step(&self) -> TimeDelta {
        self.step
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + self.step * index as i32
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.len() - 1)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.start, self.step)
    }

    /// Position of the first observation within a cycle of `period` steps,
    /// counted from the Unix epoch. For hourly data and period 24 this is the
    /// UTC hour of day.
    pub fn cycle_phase(&self, period: usize) -> usize {
        let step_secs = self.step.num_seconds().max(1);
        let steps = self.start.timestamp().div_euclid(step_secs);
        steps.rem_euclid(period as i64) as usize
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
    /// `None` for a constant series.
    pub skewness: Option<f64>,
    /// Excess kurtosis; `None` for a constant series.
    pub excess_kurtosis: Option<f64>,
}

pub fn describe(series: &TimeSeries) -> Result<SummaryStats> {
    let x = series.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "descriptive statistics",
            needed: 2,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x {
        min = min.min(v);
        max = max.max(v);
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let constant = min == max;
    let (skewness, excess_kurtosis) = if constant || m2 == 0.0 {
        (None, None)
    } else {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    Ok(SummaryStats {
        n,
        min,
        max,
        // rounding can push the mean of a constant series off by an ulp
        mean: mean.clamp(min, max),
        std_dev: if constant {
            0.0
        } else {
            (ss / (nf - 1.0)).sqrt()
        },
        skewness,
        excess_kurtosis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramResult {
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Approximate 95% band, ±1.96/√T.
    pub confidence_bound: f64,
}

impl CorrelogramResult {
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.coefficients[i])
    }
}

fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateVariance);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
        out.push((num / denom).clamp(-1.0, 1.0));
    }
    Ok(out)
}

pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<CorrelogramResult> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::InsufficientData {
            what: "autocorrelation",
            needed: max_lag + 1,
            got: n,
        });
    }
    let coefficients = sample_acf(series.values(), max_lag)?;
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_bound: 1.96 / (n as f64).sqrt(),
    })
}

/// Partial autocorrelations from the sample ACF by the Durbin–Levinson
/// recursion. Lag 0 is reported as 1.
pub fn pacf(series: &TimeSeries, max_lag: usize) -> Result<CorrelogramResult> {
    let n = series.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::InsufficientData {
            what: "partial autocorrelation",
            needed: 2 * max_lag + 1,
            got: n,
        });
    }
    let r = sample_acf(series.values(), max_lag)?;
    let mut coefficients = vec![1.0; max_lag + 1];
    let mut phi = vec![0.0; max_lag + 1];
    let mut prev = vec![0.0; max_lag + 1];
    let mut v = 1.0;
    for k in 1..=max_lag {
        let mut num = r[k];
        for j in 1..k {
            num -= prev[j] * r[k - j];
        }
        let a = if v > 0.0 { num / v } else { 0.0 };
        phi[k] = a;
        for j in 1..k {
            phi[j] = prev[j] - a * prev[k - j];
        }
        v *= 1.0 - a * a;
        coefficients[k] = a.clamp(-1.0, 1.0);
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(CorrelogramResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_bound: 1.96 / (n as f64).sqrt(),
    })
}

/// Deterministic periodic component `C(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalProfile {
    pub period: usize,
    /// `offsets[k]` is the level at cycle position `k`.
    pub offsets: Vec<f64>,
    /// Cycle position of the first observation of the estimation sample.
    pub phase: usize,
    /// Grid spacing of the estimation sample, in seconds.
    pub step_seconds: i64,
}

/// Per-position means over all cycles; a trailing partial cycle contributes
/// to the positions it covers.
pub fn seasonal_profile(series: &TimeSeries, period: usize) -> Result<SeasonalProfile> {
    if period == 0 {
        return Err(Error::invalid("seasonal period must be positive"));
    }
    let n = series.len();
    if n < 2 * period {
        return Err(Error::InsufficientData {
            what: "seasonal profile",
            needed: 2 * period,
            got: n,
        });
    }
    let phase = series.cycle_phase(period);
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (t, &v) in series.values().iter().enumerate() {
        let k = (t + phase) % period;
        sums[k] += v;
        counts[k] += 1;
    }
    let offsets = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(SeasonalProfile {
        period,
        offsets,
        phase,
        step_seconds: series.step().num_seconds(),
    })
}

fn check_alignment(series: &TimeSeries, profile: &SeasonalProfile) -> Result<usize> {
    if profile.period == 0 || profile.offsets.len() != profile.period {
        return Err(Error::Alignment(format!(
            "profile has period {} but {} offsets",
            profile.period,
            profile.offsets.len()
        )));
    }
    if profile.phase >= profile.period {
        return Err(Error::Alignment(format!(
            "phase {} outside period {}",
            profile.phase, profile.period
        )));
    }
    if series.step().num_seconds() != profile.step_seconds {
        return Err(Error::Alignment(format!(
            "series step {}s does not match profile step {}s",
            series.step().num_seconds(),
            profile.step_seconds
        )));
    }
    Ok(series.cycle_phase(profile.period))
}

fn shift(series: &TimeSeries, profile: &SeasonalProfile, sign: f64) -> Result<TimeSeries> {
    let phase = check_alignment(series, profile)?;
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(t, &v)| v + sign * profile.offsets[(t + phase) % profile.period])
        .collect();
    series.with_values(values)
}

pub fn deseasonalize(series: &TimeSeries, profile: &SeasonalProfile) -> Result<TimeSeries> {
    shift(series, profile, -1.0)
}

pub fn reseasonalize(series: &TimeSeries, profile: &SeasonalProfile) -> Result<TimeSeries> {
    shift(series, profile, 1.0)
}
