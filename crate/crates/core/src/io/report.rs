//! Versioned fit report: JSON for machines, aligned text for people.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InputDigest;
use crate::diagnostics::{SelectionRow, UnitRootResult, UnitRootTest};
use crate::error::{Error, Result};
use crate::regime::{ergodic_distribution, transition_durations, MsArFit, MsArSpec};
use crate::series::SummaryStats;

pub const SCHEMA_VERSION: u32 = 1;

pub const K_PARAMS_CONVENTION: &str = "k counts free parameters: AR(p) = p coefficients + intercept + variance; \
MS(K)-AR(p) = K*p coefficients + K means + K variances (1 if shared) + K*(K-1) transition probabilities";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library: String,
    pub library_version: String,
    pub seed: Option<u64>,
    pub input: Option<InputDigest>,
    /// Count of values filled by interpolation on load.
    pub interpolated: usize,
}

impl Provenance {
    pub fn new(seed: Option<u64>, input: Option<InputDigest>) -> Self {
        Self {
            library: env!("CARGO_PKG_NAME").into(),
            library_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            input,
            interpolated: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCoefficient {
    pub lag: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParameters {
    /// 1-based, regimes ordered by ascending mean.
    pub regime: usize,
    pub mean: f64,
    /// `mean · (1 − Σβ)`, the intercept of the equivalent AR recursion.
    pub constant: f64,
    pub beta: Vec<LagCoefficient>,
    pub variance: f64,
    pub stay_probability: f64,
    /// None when the regime is absorbing.
    pub expected_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSection {
    pub model_label: String,
    pub spec: MsArSpec,
    pub k_params: usize,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub regimes: Vec<RegimeParameters>,
    pub transition: Vec<Vec<f64>>,
    /// `1/(1 − p_ij)`; diagonal equals the expected durations.
    pub transition_durations: Vec<Vec<Option<f64>>>,
    pub ergodic_distribution: Option<Vec<f64>>,
    pub parameters: MsArFit,
}

impl FitSection {
    pub fn from_fit(fit: &MsArFit) -> Self {
        let diag = fit.transition.diagonal();
        let regimes = (0..fit.n_regimes())
            .map(|j| {
                let beta = &fit.ar_coefficients[j];
                RegimeParameters {
                    regime: j + 1,
                    mean: fit.regime_means[j],
                    constant: fit.regime_means[j] * (1.0 - beta.iter().sum::<f64>()),
                    beta: beta
                        .iter()
                        .enumerate()
                        .map(|(i, &value)| LagCoefficient { lag: i + 1, value })
                        .collect(),
                    variance: fit.variance(j),
                    stay_probability: diag[j],
                    expected_duration: (diag[j] < 1.0).then(|| 1.0 / (1.0 - diag[j])),
                }
            })
            .collect();
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            model_label: fit.spec.label(),
            spec: fit.spec,
            k_params: fit.n_params(),
            loglik: fit.loglik,
            iterations: fit.iterations,
            converged: fit.converged,
            regimes,
            transition: fit.transition.rows().to_vec(),
            transition_durations: transition_durations(&fit.transition)
                .into_iter()
                .map(|r| r.into_iter().map(finite).collect())
                .collect(),
            ergodic_distribution: ergodic_distribution(&fit.transition).ok(),
            parameters: fit.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub summary: Option<SummaryStats>,
    pub stationarity: Vec<UnitRootResult>,
    pub seasonal_period: Option<usize>,
    pub k_params_convention: String,
    /// Ranked by AIC ascending; failed fits last.
    pub selection: Vec<SelectionRow>,
    pub chosen_fit: Option<FitSection>,
    pub durbin_watson: Option<f64>,
    /// Paths relative to the report's directory.
    pub probability_files: Vec<String>,
}

impl FitReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            provenance,
            summary: None,
            stationarity: Vec::new(),
            seasonal_period: None,
            k_params_convention: K_PARAMS_CONVENTION.into(),
            selection: Vec::new(),
            chosen_fit: None,
            durbin_watson: None,
            probability_files: Vec::new(),
        }
    }

    /// Stores the selection table without the fitted model payloads.
    pub fn set_selection(&mut self, rows: &[SelectionRow]) {
        self.selection = rows
            .iter()
            .map(|r| SelectionRow {
                fit: None,
                ..r.clone()
            })
            .collect();
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(s)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported report schema version {} (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.decimals$}"))
}

pub fn render_text(report: &FitReport) -> String {
    let mut s = String::new();
    let p = &report.provenance;
    let _ = writeln!(
        s,
        "{} {} fit report (schema {})",
        p.library, p.library_version, report.schema_version
    );
    if let Some(input) = &p.input {
        let _ = writeln!(
            s,
            "input: {} ({} rows, {} to {})",
            input.path, input.rows, input.start, input.end
        );
        let _ = writeln!(s, "sha256: {}", input.sha256);
    }
    if let Some(seed) = p.seed {
        let _ = writeln!(s, "seed: {seed}");
    }
    if p.interpolated > 0 {
        let _ = writeln!(s, "interpolated values: {}", p.interpolated);
    }

    if let Some(st) = &report.summary {
        let _ = writeln!(s, "\nDescriptive statistics");
        let _ = writeln!(s, "  n          {}", st.n);
        let _ = writeln!(s, "  mean       {:.4}", st.mean);
        let _ = writeln!(s, "  std. dev.  {:.4}", st.std_dev);
        let _ = writeln!(s, "  min        {:.4}", st.min);
        let _ = writeln!(s, "  max        {:.4}", st.max);
        let _ = writeln!(s, "  skewness   {}", fmt_opt(st.skewness, 4));
        let _ = writeln!(
            s,
            "  kurtosis   {} (excess)",
            fmt_opt(st.excess_kurtosis, 4)
        );
    }

    for test in [UnitRootTest::Adf, UnitRootTest::Pp] {
        let rows: Vec<_> = report
            .stationarity
            .iter()
            .filter(|r| r.test == test)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let name = if test == UnitRootTest::Adf {
            "ADF"
        } else {
            "PP"
        };
        let _ = writeln!(s, "\n{name} unit-root test");
        let _ = writeln!(
            s,
            "  {:<16} {:>12} {:>12} {:>5}  reject",
            "variant", "statistic", "5% cv", "lag"
        );
        for r in rows {
            let _ = writeln!(
                s,
                "  {:<16} {:>12.4} {:>12.6} {:>5}  {}",
                r.variant.label(),
                r.statistic,
                r.critical_value_5pct,
                r.lag_or_bandwidth,
                if r.reject_unit_root { "yes" } else { "no" }
            );
        }
    }
    if let Some(period) = report.seasonal_period {
        let _ = writeln!(s, "\nseasonal period: {period}");
    }

    if !report.selection.is_empty() {
        let _ = writeln!(s, "\nModel selection (ranked by AIC)");
        let _ = writeln!(
            s,
            "  {:<14} {:>3} {:>14} {:>14} {:>14} {:>14}",
            "model", "k", "loglik", "AIC", "BIC", "HQC"
        );
        for row in &report.selection {
            match (&row.criteria, &row.error) {
                (Some(c), _) => {
                    let _ = writeln!(
                        s,
                        "  {:<14} {:>3} {:>14.2} {:>14.2} {:>14.2} {:>14.2}",
                        c.model_label, c.k_params, c.loglik, c.aic, c.bic, c.hqc
                    );
                }
                (None, err) => {
                    let _ = writeln!(
                        s,
                        "  {:<14} {:>3} failed: {}",
                        row.label(),
                        row.candidate.n_params(),
                        err.as_deref().unwrap_or("unknown error")
                    );
                }
            }
        }
        let _ = writeln!(s, "  ({})", report.k_params_convention);
    }

    if let Some(fit) = &report.chosen_fit {
        let _ = writeln!(
            s,
            "\n{} parameters (loglik {:.4}, {} iterations{})",
            fit.model_label,
            fit.loglik,
            fit.iterations,
            if fit.converged { "" } else { ", not converged" }
        );
        let _ = writeln!(
            s,
            "  {:<7} {:<10} {:>14}",
            "regime", "parameter", "estimate"
        );
        for r in &fit.regimes {
            let _ = writeln!(s, "  {:<7} {:<10} {:>14.4}", r.regime, "mu", r.mean);
            for b in &r.beta {
                let _ = writeln!(
                    s,
                    "  {:<7} {:<10} {:>14.4}",
                    "",
                    format!("beta_{}", b.lag),
                    b.value
                );
            }
            let _ = writeln!(s, "  {:<7} {:<10} {:>14.4}", "", "sigma^2", r.variance);
        }

        let _ = writeln!(s, "\nTransition matrix P (row i: from regime i)");
        for row in &fit.transition {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(s, "  {}", cells.join("  "));
        }

        let _ = writeln!(s, "\nExpected durations (steps)");
        for r in &fit.regimes {
            let _ = writeln!(
                s,
                "  regime {}: {}",
                r.regime,
                fmt_opt(r.expected_duration, 3)
            );
        }
        let k = fit.transition.len();
        if k > 1 {
            let _ = writeln!(s, "\nTransitional durations 1/(1-p_ij)");
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let _ = writeln!(
                            s,
                            "  {} -> {}: {}",
                            i + 1,
                            j + 1,
                            fmt_opt(fit.transition_durations[i][j], 3)
                        );
                    }
                }
            }
        }
        if let Some(pi) = &fit.ergodic_distribution {
            let cells: Vec<String> = pi.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(s, "\nErgodic distribution: {}", cells.join("  "));
        }
    }

    if let Some(dw) = report.durbin_watson {
        let _ = writeln!(s, "\nDurbin-Watson statistic of fit residuals: {dw:.5}");
    }
    if !report.probability_files.is_empty() {
        let _ = writeln!(s, "\nProbability files:");
        for f in &report.probability_files {
            let _ = writeln!(s, "  {f}");
        }
    }
    s
}

/// Writes the report; every referenced probability file must already exist
/// relative to the destination directory.
pub fn write_report(
    report: &FitReport,
    format: ReportFormat,
    dest: impl AsRef<Path>,
) -> Result<()> {
    let dest = dest.as_ref();
    let dir = dest.parent().unwrap_or(Path::new("."));
    for f in &report.probability_files {
        let p = dir.join(f);
        if !p.is_file() {
            return Err(Error::invalid(format!(
                "referenced probability file {} does not exist",
                p.display()
            )));
        }
    }
    let body = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Text => render_text(report),
    };
    std::fs::write(dest, body)?;
    Ok(())
}
