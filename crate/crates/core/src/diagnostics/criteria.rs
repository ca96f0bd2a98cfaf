use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRow {
    pub model_label: String,
    pub k_params: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
}

impl CriteriaRow {
    pub fn new(
        model_label: impl Into<String>,
        loglik: f64,
        k_params: usize,
        n: usize,
    ) -> Result<Self> {
        let ic = info_criteria(loglik, k_params, n)?;
        Ok(Self {
            model_label: model_label.into(),
            k_params,
            loglik,
            aic: ic.aic,
            bic: ic.bic,
            hqc: ic.hqc,
        })
    }
}

/// AIC `2k − 2ℓ`, BIC `k ln n − 2ℓ`, HQC `2k ln ln n − 2ℓ`.
pub fn info_criteria(loglik: f64, k_params: usize, n: usize) -> Result<InfoCriteria> {
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "Hannan–Quinn criterion (ln ln n)",
            needed: 3,
            got: n,
        });
    }
    if !loglik.is_finite() {
        return Err(Error::invalid("log-likelihood must be finite"));
    }
    let k = k_params as f64;
    let nf = n as f64;
    Ok(InfoCriteria {
        aic: 2.0 * k - 2.0 * loglik,
        bic: k * nf.ln() - 2.0 * loglik,
        hqc: 2.0 * k * nf.ln().ln() - 2.0 * loglik,
    })
}
