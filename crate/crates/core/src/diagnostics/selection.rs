//! Fit a grid of AR and MS-AR candidates and rank them by AIC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CriteriaRow;
use crate::ar::{fit_ar, ArFit};
use crate::error::{Error, Result};
use crate::regime::{em_fit, EmConfig, MsArFit, MsArSpec, VarianceMode};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Ar,
    MsAr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Candidate {
    Ar { p: usize },
    MsAr { spec: MsArSpec },
}

impl Candidate {
    pub fn label(&self) -> String {
        match self {
            Self::Ar { p } => format!("AR({p})"),
            Self::MsAr { spec } => spec.label(),
        }
    }

    /// AR: `p` coefficients, intercept and variance. MS-AR: see [`MsArSpec::n_params`].
    pub fn n_params(&self) -> usize {
        match self {
            Self::Ar { p } => p + 2,
            Self::MsAr { spec } => spec.n_params(),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            Self::Ar { .. } => ModelFamily::Ar,
            Self::MsAr { .. } => ModelFamily::MsAr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Ar(ArFit),
    MsAr(MsArFit),
}

impl FittedModel {
    pub fn loglik(&self) -> f64 {
        match self {
            Self::Ar(f) => f.loglik,
            Self::MsAr(f) => f.loglik,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n_regimes: usize,
    pub variance_mode: VarianceMode,
    pub em: EmConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_regimes: 2,
            variance_mode: VarianceMode::PerRegime,
            em: EmConfig::default(),
        }
    }
}

/// One candidate's outcome. Failed fits keep their row with `criteria`
/// empty and the error message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub candidate: Candidate,
    pub criteria: Option<CriteriaRow>,
    pub error: Option<String>,
    #[serde(skip)]
    pub fit: Option<FittedModel>,
}

impl SelectionRow {
    pub fn label(&self) -> String {
        self.candidate.label()
    }

    pub fn aic(&self) -> Option<f64> {
        self.criteria.as_ref().map(|c| c.aic)
    }
}

pub fn candidates(
    p_range: &[usize],
    families: &[ModelFamily],
    config: &SelectionConfig,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for fam in [ModelFamily::Ar, ModelFamily::MsAr] {
        if !families.contains(&fam) {
            continue;
        }
        for &p in p_range {
            out.push(match fam {
                ModelFamily::Ar => Candidate::Ar { p },
                ModelFamily::MsAr => Candidate::MsAr {
                    spec: MsArSpec::new(config.n_regimes, p, config.variance_mode)?,
                },
            });
        }
    }
    Ok(out)
}

fn fit_candidate(
    series: &TimeSeries,
    c: Candidate,
    config: &SelectionConfig,
) -> Result<FittedModel> {
    match c {
        Candidate::Ar { p } => fit_ar(series, p).map(FittedModel::Ar),
        Candidate::MsAr { spec } => em_fit(series, spec, &config.em).map(FittedModel::MsAr),
    }
}

/// Fits every candidate (concurrently) and ranks successful rows by AIC
/// ascending, ties in candidate order; failed rows follow in candidate
/// order. BIC and HQC use `n` = series length.
pub fn select_model(
    series: &TimeSeries,
    p_range: &[usize],
    families: &[ModelFamily],
    config: &SelectionConfig,
) -> Result<Vec<SelectionRow>> {
    if p_range.is_empty() || families.is_empty() {
        return Err(Error::invalid(
            "model selection needs at least one order and one family",
        ));
    }
    let cands = candidates(p_range, families, config)?;
    let n = series.len();
    let mut rows: Vec<SelectionRow> = cands
        .par_iter()
        .map(|&candidate| {
            let outcome = fit_candidate(series, candidate, config).and_then(|fit| {
                let row =
                    CriteriaRow::new(candidate.label(), fit.loglik(), candidate.n_params(), n)?;
                Ok((row, fit))
            });
            match outcome {
                Ok((row, fit)) => SelectionRow {
                    candidate,
                    criteria: Some(row),
                    error: None,
                    fit: Some(fit),
                },
                Err(e) => {
                    log::warn!("{}: {e}", candidate.label());
                    SelectionRow {
                        candidate,
                        criteria: None,
                        error: Some(e.to_string()),
                        fit: None,
                    }
                }
            }
        })
        .collect();
    // stable sort keeps candidate order among ties and failures
    rows.sort_by(|a, b| match (a.aic(), b.aic()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}
