//! Hamilton filter and Kim smoother over joint regime states.

use serde::{Deserialize, Serialize};

use super::{log_densities, JointSpace, MsArFit};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Smoothed ratios whose predicted denominator falls below this are dropped;
/// the matching numerator is then zero as well.
const PREDICTED_FLOOR: f64 = 1e-300;

/// Per-step joint-state probabilities. Row `τ` refers to observation
/// `t = offset + τ`, where `offset` is the AR order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPath {
    pub n_regimes: usize,
    pub ar_order: usize,
    pub offset: usize,
    /// `Pr(joint state at t | y_..t−1)`
    pub predicted: Vec<Vec<f64>>,
    /// `Pr(joint state at t | y_..t)`
    pub filtered: Vec<Vec<f64>>,
    /// `Pr(joint state at t | y_..T)`, once the smoother has run.
    pub smoothed: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilitySource {
    Filtered,
    Smoothed,
}

/// Most probable regime per step, labelled 1..=K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimePath {
    pub labels: Vec<usize>,
    pub source: Option<ProbabilitySource>,
}

impl ProbabilityPath {
    pub fn len(&self) -> usize {
        self.filtered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filtered.is_empty()
    }

    fn marginalize(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = self.n_regimes;
        rows.iter()
            .map(|row| {
                let mut m = vec![0.0; k];
                for (idx, &v) in row.iter().enumerate() {
                    m[idx % k] += v;
                }
                m
            })
            .collect()
    }

    pub fn predicted_marginals(&self) -> Vec<Vec<f64>> {
        self.marginalize(&self.predicted)
    }

    pub fn filtered_marginals(&self) -> Vec<Vec<f64>> {
        self.marginalize(&self.filtered)
    }

    pub fn smoothed_marginals(&self) -> Option<Vec<Vec<f64>>> {
        self.smoothed.as_deref().map(|s| self.marginalize(s))
    }

    pub fn marginals(&self, source: ProbabilitySource) -> Option<Vec<Vec<f64>>> {
        match source {
            ProbabilitySource::Filtered => Some(self.filtered_marginals()),
            ProbabilitySource::Smoothed => self.smoothed_marginals(),
        }
    }
}

/// Prior over the first joint state `(s_p, …, s_0)` from the chain law.
fn initial_joint_prior(params: &MsArFit, js: &JointSpace) -> Vec<f64> {
    (0..js.size)
        .map(|idx| {
            let mut pr = params.initial_distribution[js.regime(idx, js.p)];
            for lag in (1..=js.p).rev() {
                pr *= params
                    .transition
                    .get(js.regime(idx, lag), js.regime(idx, lag - 1));
            }
            pr
        })
        .collect()
}

/// Forward recursion. Returns predicted and filtered joint probabilities and
/// the log-likelihood conditional on the first `p` observations.
pub fn hamilton_filter(params: &MsArFit, series: &TimeSeries) -> Result<(ProbabilityPath, f64)> {
    params.validate(false)?;
    let y = series.values();
    let p = params.ar_order();
    let k = params.n_regimes();
    if y.len() <= p {
        return Err(Error::InsufficientData {
            what: "Hamilton filter",
            needed: p + 1,
            got: y.len(),
        });
    }
    let js = JointSpace::new(k, p);
    let ld = log_densities(params, y);
    let n = ld.len();
    let mut predicted = Vec::with_capacity(n);
    let mut filtered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut total = 0.0;
    let mut lw = vec![0.0; js.size];

    for (tau, dens) in ld.iter().enumerate() {
        let pred: Vec<f64> = match filtered.last() {
            None => initial_joint_prior(params, &js),
            Some(prev) => (0..js.size)
                .map(|idx| {
                    let from = js.regime(idx, 1);
                    let to = js.regime(idx, 0);
                    let mass: f64 = (0..k).map(|b| prev[js.predecessor(idx, b)]).sum();
                    params.transition.get(from, to) * mass
                })
                .collect(),
        };
        let mut max = f64::NEG_INFINITY;
        for idx in 0..js.size {
            lw[idx] = if pred[idx] > 0.0 {
                pred[idx].ln() + dens[idx]
            } else {
                f64::NEG_INFINITY
            };
            if lw[idx] > max {
                max = lw[idx];
            }
        }
        if !max.is_finite() {
            return Err(Error::NumericalDegeneracy { t: p + tau });
        }
        let mut filt: Vec<f64> = lw.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = filt.iter().sum();
        filt.iter_mut().for_each(|v| *v /= sum);
        total += max + sum.ln();
        predicted.push(pred);
        filtered.push(filt);
    }

    Ok((
        ProbabilityPath {
            n_regimes: k,
            ar_order: p,
            offset: p,
            predicted,
            filtered,
            smoothed: None,
        },
        total,
    ))
}

/// Backward recursion producing `Pr(joint state at t | all data)`.
pub fn kim_smoother(params: &MsArFit, filter_output: &ProbabilityPath) -> Result<ProbabilityPath> {
    let k = params.n_regimes();
    let p = params.ar_order();
    if filter_output.n_regimes != k || filter_output.ar_order != p {
        return Err(Error::invalid(
            "filter output does not match the model order",
        ));
    }
    let n = filter_output.len();
    if n == 0 || filter_output.predicted.len() != n {
        return Err(Error::invalid("filter output is incomplete"));
    }
    let js = JointSpace::new(k, p);
    let mut smoothed = vec![Vec::new(); n];
    smoothed[n - 1] = filter_output.filtered[n - 1].clone();
    let mut ratio = vec![0.0; js.size];
    for tau in (0..n - 1).rev() {
        let next_pred = &filter_output.predicted[tau + 1];
        let next_sm = &smoothed[tau + 1];
        for idx in 0..js.size {
            ratio[idx] = if next_pred[idx] > PREDICTED_FLOOR {
                next_sm[idx] / next_pred[idx]
            } else {
                0.0
            };
        }
        let filt = &filter_output.filtered[tau];
        let mut row: Vec<f64> = (0..js.size)
            .map(|idx| {
                let from = js.regime(idx, 0);
                let back: f64 = (0..k)
                    .map(|c| params.transition.get(from, c) * ratio[js.successor(idx, c)])
                    .sum();
                filt[idx] * back
            })
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
        smoothed[tau] = row;
    }
    let mut out = filter_output.clone();
    out.smoothed = Some(smoothed);
    Ok(out)
}

/// Log-likelihood of the series under `params`, conditional on the first
/// `p` observations.
pub fn loglik(params: &MsArFit, series: &TimeSeries) -> Result<f64> {
    hamilton_filter(params, series).map(|(_, ll)| ll)
}

/// Argmax over regime marginals; ties resolve to the lower regime.
pub fn classify_regimes(path: &ProbabilityPath, source: ProbabilitySource) -> Result<RegimePath> {
    let marginals = path
        .marginals(source)
        .ok_or_else(|| Error::invalid("smoothed probabilities have not been computed"))?;
    let labels = marginals
        .iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best + 1
        })
        .collect();
    Ok(RegimePath {
        labels,
        source: Some(source),
    })
}
