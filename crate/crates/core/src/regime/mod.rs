//! Markov-switching autoregression in mean-adjusted form:
//!
//! ```text
//! y_t − μ(s_t) = Σ_{i=1..p} β(s_t, i) · (y_{t−i} − μ(s_{t−i})) + ε_t,   ε_t ~ N(0, σ²(s_t))
//! ```
//!
//! Because the conditional mean involves the regimes of the last `p` steps,
//! filtering runs over joint states `(s_t, s_{t−1}, …, s_{t−p})`, `K^(p+1)` of
//! them. A joint state is encoded as `Σ_i s_{t−i} · K^i`, so the current
//! regime is the least significant digit.
//!
//! Regime indices are zero-based throughout the API, except for
//! [`RegimePath`] labels, which run from 1 to K (regime 1 = lowest mean).

mod chain;
mod em;
mod enumerate;
mod filter;
mod simulate;

pub use chain::{ergodic_distribution, expected_duration, transition_durations};
pub use em::{e_step, em_fit, m_step, msar_residuals, EStep, EmConfig};
pub use enumerate::{enumerate_exact, ExactPosterior, ENUMERATION_LIMIT};
pub use filter::{
    classify_regimes, hamilton_filter, kim_smoother, loglik, ProbabilityPath, ProbabilitySource,
    RegimePath,
};
pub use simulate::simulate_msar;

use serde::{Deserialize, Serialize};

use crate::ar::{ln_normal, LN_2PI};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    PerRegime,
    Shared,
}

/// Model order: number of regimes and autoregressive lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsArSpec {
    pub n_regimes: usize,
    pub ar_order: usize,
    pub variance_mode: VarianceMode,
}

impl MsArSpec {
    /// `n_regimes = 1` is accepted and reduces the model to a plain AR(p).
    pub fn new(n_regimes: usize, ar_order: usize, variance_mode: VarianceMode) -> Result<Self> {
        if n_regimes == 0 {
            return Err(Error::invalid("need at least one regime"));
        }
        if ar_order == 0 {
            return Err(Error::invalid("AR order must be at least 1"));
        }
        let states = (n_regimes as u128).checked_pow(ar_order as u32 + 1);
        if states.is_none_or(|s| s > 1 << 16) {
            return Err(Error::invalid(format!(
                "{n_regimes}^{} joint states is too many",
                ar_order + 1
            )));
        }
        Ok(Self {
            n_regimes,
            ar_order,
            variance_mode,
        })
    }

    pub fn two_regime(ar_order: usize) -> Result<Self> {
        Self::new(2, ar_order, VarianceMode::PerRegime)
    }

    pub fn n_variances(&self) -> usize {
        match self.variance_mode {
            VarianceMode::PerRegime => self.n_regimes,
            VarianceMode::Shared => 1,
        }
    }

    /// Free parameters: `K·p` coefficients, `K` means, the variances and
    /// `K·(K−1)` transition probabilities.
    pub fn n_params(&self) -> usize {
        let k = self.n_regimes;
        k * self.ar_order + k + self.n_variances() + k * (k - 1)
    }

    pub fn n_joint_states(&self) -> usize {
        self.n_regimes.pow(self.ar_order as u32 + 1)
    }

    pub fn label(&self) -> String {
        format!("MS({})-AR({})", self.n_regimes, self.ar_order)
    }
}

/// Row-stochastic `K×K` matrix, `p_ij = Pr(s_t = j | s_{t−1} = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::invalid("empty transition matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "transition row {i} has wrong length"
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!(
                    "transition row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("transition row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    /// Diagonal `stay` with the remainder spread evenly off the diagonal.
    pub fn with_diagonal(k: usize, stay: f64) -> Result<Self> {
        if k == 1 {
            return Self::new(vec![vec![1.0]]);
        }
        let off = (1.0 - stay) / (k - 1) as f64;
        Self::new(
            (0..k)
                .map(|i| (0..k).map(|j| if i == j { stay } else { off }).collect())
                .collect(),
        )
    }

    pub fn n_regimes(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_regimes()).map(|i| self.rows[i][i]).collect()
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(m: TransitionMatrix) -> Self {
        m.rows
    }
}

/// Full MS-AR parameter set plus estimation metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsArFit {
    pub spec: MsArSpec,
    pub regime_means: Vec<f64>,
    /// `ar_coefficients[j][i-1]` is β for regime `j` at lag `i`.
    pub ar_coefficients: Vec<Vec<f64>>,
    /// One entry per regime, or a single shared entry.
    pub variances: Vec<f64>,
    pub transition: TransitionMatrix,
    /// Distribution of the regime at the first conditioning lag.
    pub initial_distribution: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each accepted EM iteration.
    #[serde(default)]
    pub loglik_trace: Vec<f64>,
}

impl MsArFit {
    /// Builds a parameter set; the initial distribution defaults to the
    /// ergodic distribution of `transition`.
    pub fn new(
        spec: MsArSpec,
        regime_means: Vec<f64>,
        ar_coefficients: Vec<Vec<f64>>,
        variances: Vec<f64>,
        transition: TransitionMatrix,
        initial_distribution: Option<Vec<f64>>,
    ) -> Result<Self> {
        let initial_distribution = match initial_distribution {
            Some(pi) => pi,
            None => ergodic_distribution(&transition)?,
        };
        let fit = Self {
            spec,
            regime_means,
            ar_coefficients,
            variances,
            transition,
            initial_distribution,
            loglik: f64::NAN,
            iterations: 0,
            converged: false,
            loglik_trace: Vec::new(),
        };
        fit.validate(false)?;
        Ok(fit)
    }

    pub(crate) fn validate(&self, allow_zero_variance: bool) -> Result<()> {
        let k = self.spec.n_regimes;
        let p = self.spec.ar_order;
        if self.regime_means.len() != k
            || self.ar_coefficients.len() != k
            || self.ar_coefficients.iter().any(|row| row.len() != p)
            || self.variances.len() != self.spec.n_variances()
            || self.transition.n_regimes() != k
            || self.initial_distribution.len() != k
        {
            return Err(Error::invalid(format!(
                "parameter dimensions do not match {}",
                self.spec.label()
            )));
        }
        let finite = self.regime_means.iter().all(|v| v.is_finite())
            && self.ar_coefficients.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite mean or AR coefficient"));
        }
        let bad_var = |v: &f64| {
            if allow_zero_variance {
                !(*v >= 0.0 && v.is_finite())
            } else {
                !(*v > 0.0 && v.is_finite())
            }
        };
        if self.variances.iter().any(bad_var) {
            return Err(Error::invalid("regime variances must be positive"));
        }
        let pi_sum: f64 = self.initial_distribution.iter().sum();
        if self.initial_distribution.iter().any(|&v| v < 0.0) || (pi_sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "initial distribution is not a probability vector",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn variance(&self, regime: usize) -> f64 {
        match self.spec.variance_mode {
            VarianceMode::PerRegime => self.variances[regime],
            VarianceMode::Shared => self.variances[0],
        }
    }

    pub fn n_regimes(&self) -> usize {
        self.spec.n_regimes
    }

    pub fn ar_order(&self) -> usize {
        self.spec.ar_order
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    /// Relabels regimes so means are ascending.
    pub fn canonicalize(&mut self) {
        let k = self.n_regimes();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| self.regime_means[a].total_cmp(&self.regime_means[b]));
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return;
        }
        self.permute(&order);
    }

    /// New regime `i` is old regime `order[i]`.
    pub(crate) fn permute(&mut self, order: &[usize]) {
        self.regime_means = order.iter().map(|&o| self.regime_means[o]).collect();
        self.ar_coefficients = order
            .iter()
            .map(|&o| self.ar_coefficients[o].clone())
            .collect();
        if self.spec.variance_mode == VarianceMode::PerRegime {
            self.variances = order.iter().map(|&o| self.variances[o]).collect();
        }
        self.initial_distribution = order
            .iter()
            .map(|&o| self.initial_distribution[o])
            .collect();
        let rows = order
            .iter()
            .map(|&oi| {
                order
                    .iter()
                    .map(|&oj| self.transition.get(oi, oj))
                    .collect()
            })
            .collect();
        self.transition = TransitionMatrix::from_rows_unchecked(rows);
    }

    /// Conditional mean of `y_t` given the window and joint state.
    pub(crate) fn conditional_mean(&self, lags: &[f64], states: &[usize]) -> f64 {
        let j = states[0];
        let beta = &self.ar_coefficients[j];
        let mut m = self.regime_means[j];
        for i in 1..=self.ar_order() {
            m += beta[i - 1] * (lags[i - 1] - self.regime_means[states[i]]);
        }
        m
    }
}

/// Index arithmetic for joint states `(s_t, …, s_{t−p})`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JointSpace {
    pub k: usize,
    pub p: usize,
    pub size: usize,
    /// `K^p`
    pub stride: usize,
}

impl JointSpace {
    pub fn new(k: usize, p: usize) -> Self {
        let stride = k.pow(p as u32);
        Self {
            k,
            p,
            size: stride * k,
            stride,
        }
    }

    /// Regime `lag` steps back (lag 0 = current).
    #[inline]
    pub fn regime(&self, idx: usize, lag: usize) -> usize {
        (idx / self.k.pow(lag as u32)) % self.k
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        (0..=self.p).map(|l| self.regime(idx, l)).collect()
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        states.iter().rev().fold(0, |acc, &s| acc * self.k + s)
    }

    /// Joint state one step later with new current regime `next`.
    #[inline]
    pub fn successor(&self, idx: usize, next: usize) -> usize {
        next + self.k * (idx % self.stride)
    }

    /// Joint state one step earlier whose oldest regime is `oldest`.
    #[inline]
    pub fn predecessor(&self, idx: usize, oldest: usize) -> usize {
        idx / self.k + oldest * self.stride
    }
}

/// Log density of `y_t` for every joint state, at each `t = p..T`.
/// Row `τ` corresponds to `t = p + τ`.
pub(crate) fn log_densities(params: &MsArFit, y: &[f64]) -> Vec<Vec<f64>> {
    let p = params.ar_order();
    let js = JointSpace::new(params.n_regimes(), p);
    let states: Vec<Vec<usize>> = (0..js.size).map(|s| js.decode(s)).collect();
    let ln_var: Vec<f64> = (0..params.n_regimes())
        .map(|j| params.variance(j).ln())
        .collect();
    let mut lags = vec![0.0; p];
    (p..y.len())
        .map(|t| {
            for i in 1..=p {
                lags[i - 1] = y[t - i];
            }
            states
                .iter()
                .map(|st| {
                    let r = y[t] - params.conditional_mean(&lags, st);
                    let v = params.variance(st[0]);
                    -0.5 * (LN_2PI + ln_var[st[0]] + r * r / v)
                })
                .collect()
        })
        .collect()
}

/// Gaussian density of `y_t` given `window = [y_{t−p}, …, y_{t−1}, y_t]`
/// (chronological) and `states = [s_t, s_{t−1}, …, s_{t−p}]`.
pub fn conditional_density(params: &MsArFit, window: &[f64], states: &[usize]) -> Result<f64> {
    let p = params.ar_order();
    if window.len() != p + 1 || states.len() != p + 1 {
        return Err(Error::invalid(format!(
            "window and state tuple must both have length {}",
            p + 1
        )));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("window contains non-finite values"));
    }
    if states.iter().any(|&s| s >= params.n_regimes()) {
        return Err(Error::invalid("regime index out of range"));
    }
    let var = params.variance(states[0]);
    if !(var > 0.0) {
        return Err(Error::invalid("variance must be positive"));
    }
    let lags: Vec<f64> = window[..p].iter().rev().copied().collect();
    let r = window[p] - params.conditional_mean(&lags, states);
    Ok(ln_normal(r, var).exp())
}
