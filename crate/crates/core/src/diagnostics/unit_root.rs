//! Augmented Dickey–Fuller and Phillips–Perron unit-root tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::ols;
use crate::series::TimeSeries;

const MIN_LENGTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UnitRootTest {
    Adf,
    Pp,
}

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicVariant {
    None,
    Constant,
    ConstantTrend,
}

impl DeterministicVariant {
    fn n_terms(self) -> usize {
        match self {
            Self::None => 0,
            Self::Constant => 1,
            Self::ConstantTrend => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Constant => "constant",
            Self::ConstantTrend => "constant_trend",
        }
    }
}

impl std::str::FromStr for DeterministicVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "constant" | "c" => Ok(Self::Constant),
            "constant_trend" | "constant-trend" | "ct" => Ok(Self::ConstantTrend),
            _ => Err(Error::invalid(format!(
                "unknown deterministic variant {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub variant: DeterministicVariant,
    pub statistic: f64,
    pub critical_value_5pct: f64,
    pub lag_or_bandwidth: usize,
    pub reject_unit_root: bool,
}

impl UnitRootResult {
    fn new(
        test: UnitRootTest,
        variant: DeterministicVariant,
        statistic: f64,
        cv: f64,
        lag: usize,
    ) -> Self {
        Self {
            test,
            variant,
            statistic,
            critical_value_5pct: cv,
            lag_or_bandwidth: lag,
            reject_unit_root: statistic < cv,
        }
    }
}

pub fn adf_critical_value(variant: DeterministicVariant) -> f64 {
    match variant {
        DeterministicVariant::None => -1.95,
        DeterministicVariant::Constant => -2.86,
        DeterministicVariant::ConstantTrend => -3.41,
    }
}

pub fn pp_critical_value(variant: DeterministicVariant) -> Result<f64> {
    match variant {
        DeterministicVariant::None => Err(Error::invalid(
            "Phillips–Perron test needs a constant or constant_trend variant",
        )),
        DeterministicVariant::Constant => Ok(-2.862418),
        DeterministicVariant::ConstantTrend => Ok(-3.413069),
    }
}

/// Schwert rule, `floor(12·(T/100)^¼)`.
pub fn default_adf_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// `floor(4·(T/100)^(2/9))`.
pub fn default_pp_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn check_length(series: &TimeSeries, what: &'static str) -> Result<()> {
    if series.len() < MIN_LENGTH {
        return Err(Error::InsufficientData {
            what,
            needed: MIN_LENGTH,
            got: series.len(),
        });
    }
    Ok(())
}

fn push_deterministic(row: &mut Vec<f64>, variant: DeterministicVariant, t: usize) {
    if variant.n_terms() >= 1 {
        row.push(1.0);
    }
    if variant.n_terms() == 2 {
        row.push(t as f64);
    }
}

/// Regression of `Δy_t` on `y_{t−1}`, deterministic terms and `lag` lagged
/// differences; the statistic is the t-ratio on `y_{t−1}`.
pub fn adf_test(
    series: &TimeSeries,
    variant: DeterministicVariant,
    lag_order: Option<usize>,
) -> Result<UnitRootResult> {
    check_length(series, "ADF test")?;
    let y = series.values();
    let lag = lag_order.unwrap_or_else(|| default_adf_lag(y.len()));
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let cols = 1 + variant.n_terms() + lag;
    // dy[i] = y[i+1] − y[i]; rows use i = lag..dy.len()
    let n = dy.len().saturating_sub(lag);
    if n <= cols {
        return Err(Error::InsufficientData {
            what: "ADF regression after lagging",
            needed: lag + cols + 2,
            got: y.len(),
        });
    }
    let mut data = Vec::with_capacity(n * cols);
    for i in lag..dy.len() {
        data.push(y[i]);
        push_deterministic(&mut data, variant, i + 1);
        for j in 1..=lag {
            data.push(dy[i - j]);
        }
    }
    let x = DMatrix::from_row_slice(n, cols, &data);
    let target = DVector::from_column_slice(&dy[lag..]);
    let fit = ols(x, &target, "ADF regression")?;
    let s2 = fit.rss / (n - cols) as f64;
    let se = (s2 * fit.xtx_inv[(0, 0)]).sqrt();
    let stat = fit.coef[0] / se;
    if !stat.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    Ok(UnitRootResult::new(
        UnitRootTest::Adf,
        variant,
        stat,
        adf_critical_value(variant),
        lag,
    ))
}

/// Phillips–Perron Z-tau with a Bartlett-kernel Newey–West long-run variance.
pub fn pp_test(series: &TimeSeries, variant: DeterministicVariant) -> Result<UnitRootResult> {
    let cv = pp_critical_value(variant)?;
    check_length(series, "PP test")?;
    let y = series.values();
    let n = y.len() - 1;
    let cols = 1 + variant.n_terms();
    let mut data = Vec::with_capacity(n * cols);
    for t in 1..y.len() {
        data.push(y[t - 1]);
        push_deterministic(&mut data, variant, t);
    }
    let x = DMatrix::from_row_slice(n, cols, &data);
    let target = DVector::from_column_slice(&y[1..]);
    let fit = ols(x, &target, "PP regression")?;
    let u = &fit.residuals;
    let nf = n as f64;
    let s2 = fit.rss / (n - cols) as f64;
    let se = (s2 * fit.xtx_inv[(0, 0)]).sqrt();
    let t_rho = (fit.coef[0] - 1.0) / se;

    let bandwidth = default_pp_bandwidth(y.len());
    let gamma = |j: usize| -> f64 { (j..n).map(|t| u[t] * u[t - j]).sum::<f64>() / nf };
    let gamma0 = gamma(0);
    let mut lrv = gamma0;
    for j in 1..=bandwidth {
        lrv += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * gamma(j);
    }
    if !(gamma0 > 0.0 && lrv > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let lambda = lrv.sqrt();
    let stat =
        (gamma0 / lrv).sqrt() * t_rho - 0.5 * (lrv - gamma0) / lambda * (nf * se / s2.sqrt());
    if !stat.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    Ok(UnitRootResult::new(
        UnitRootTest::Pp,
        variant,
        stat,
        cv,
        bandwidth,
    ))
}
