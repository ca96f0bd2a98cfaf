//! Expectation–maximization for MS-AR models.
//!
//! The E-step is the Hamilton filter followed by the Kim smoother. The
//! M-step maximizes the expected complete-data log-likelihood given the
//! smoothed joint-state probabilities:
//!
//! * transitions from expected pair counts, clamped to `[1e-6, 1 − 1e-6]`
//!   and row-renormalized;
//! * means and AR coefficients jointly, by damped Gauss–Newton on the
//!   probability-weighted squared residuals;
//! * variances in closed form, floored at `1e-8` times the sample variance.
//!
//! An iteration is only accepted if the log-likelihood does not decrease;
//! otherwise the step is shortened towards the previous parameters, and if
//! no shortened step ascends the fit is reported as converged.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    ergodic_distribution, hamilton_filter, kim_smoother, JointSpace, MsArFit, MsArSpec,
    ProbabilityPath, TransitionMatrix, VarianceMode,
};
use crate::ar::{companion_spectral_radius, fit_ar};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

const PROB_CLAMP: f64 = 1e-6;
const VARIANCE_FLOOR_RATIO: f64 = 1e-8;
const MAX_STEP_HALVINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmConfig {
    /// Number of starting points; restart 0 is the unperturbed start.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain falls below this.
    pub tol: f64,
    /// Seeds the restart perturbations.
    pub seed: u64,
    /// Run restarts on the rayon pool. Output does not depend on this.
    pub parallel: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 500,
            tol: 1e-6,
            seed: 0,
            parallel: true,
        }
    }
}

impl EmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Filtered and smoothed probabilities plus the log-likelihood.
#[derive(Debug, Clone)]
pub struct EStep {
    pub path: ProbabilityPath,
    pub loglik: f64,
}

pub fn e_step(params: &MsArFit, series: &TimeSeries) -> Result<EStep> {
    let (filtered, loglik) = hamilton_filter(params, series)?;
    let path = kim_smoother(params, &filtered)?;
    Ok(EStep { path, loglik })
}

fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Weighted second moments of `z_t = (1, y_t − c, y_{t−1} − c, …, y_{t−p} − c)`
/// per joint state, where `c` is the series mean.
struct Moments {
    center: f64,
    dim: usize,
    /// Row-major `dim × dim` blocks, one per joint state.
    blocks: Vec<Vec<f64>>,
}

impl Moments {
    fn collect(y: &[f64], p: usize, smoothed: &[Vec<f64>], n_states: usize) -> Self {
        let center = y.iter().sum::<f64>() / y.len() as f64;
        let dim = p + 2;
        let mut blocks = vec![vec![0.0; dim * dim]; n_states];
        let mut z = vec![0.0; dim];
        let mut zz = vec![0.0; dim * dim];
        for (tau, w) in smoothed.iter().enumerate() {
            let t = p + tau;
            z[0] = 1.0;
            for i in 0..=p {
                z[1 + i] = y[t - i] - center;
            }
            for a in 0..dim {
                for b in 0..dim {
                    zz[a * dim + b] = z[a] * z[b];
                }
            }
            for (s, &ws) in w.iter().enumerate() {
                if ws > 0.0 {
                    for (m, v) in blocks[s].iter_mut().zip(&zz) {
                        *m += ws * v;
                    }
                }
            }
        }
        Self {
            center,
            dim,
            blocks,
        }
    }

    fn weight(&self, s: usize) -> f64 {
        self.blocks[s][0]
    }

    fn quad(&self, s: usize, c: &[f64]) -> f64 {
        let m = &self.blocks[s];
        let d = self.dim;
        let mut acc = 0.0;
        for a in 0..d {
            let mut row = 0.0;
            for b in 0..d {
                row += m[a * d + b] * c[b];
            }
            acc += c[a] * row;
        }
        acc
    }
}

/// Location parameters `θ = (μ'_0..μ'_{K−1}, β_{0,1..p}, …, β_{K−1,1..p})`
/// with `μ' = μ − center`.
struct Location<'a> {
    js: JointSpace,
    states: Vec<Vec<usize>>,
    moments: &'a Moments,
    inv_var: Vec<f64>,
}

impl Location<'_> {
    fn dim(&self) -> usize {
        self.js.k * (1 + self.js.p)
    }

    fn beta_index(&self, regime: usize, lag: usize) -> usize {
        self.js.k + regime * self.js.p + (lag - 1)
    }

    /// Residual coefficients: `r_t = c · z_t`.
    fn residual_coefs(&self, theta: &[f64], st: &[usize], c: &mut [f64]) {
        let p = self.js.p;
        let j = st[0];
        let mut c0 = -theta[j];
        for i in 1..=p {
            c0 += theta[self.beta_index(j, i)] * theta[st[i]];
        }
        c[0] = c0;
        c[1] = 1.0;
        for i in 1..=p {
            c[1 + i] = -theta[self.beta_index(j, i)];
        }
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let mut c = vec![0.0; self.moments.dim];
        let mut total = 0.0;
        for (s, st) in self.states.iter().enumerate() {
            if self.moments.weight(s) <= 0.0 {
                continue;
            }
            self.residual_coefs(theta, st, &mut c);
            total += self.inv_var[st[0]] * self.moments.quad(s, &c);
        }
        total
    }

    fn normal_equations(&self, theta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.dim();
        let m_dim = self.moments.dim;
        let p = self.js.p;
        let mut h = DMatrix::<f64>::zeros(d, d);
        let mut g = DVector::<f64>::zeros(d);
        let mut c = vec![0.0; m_dim];
        let mut jac = DMatrix::<f64>::zeros(m_dim, d);
        for (s, st) in self.states.iter().enumerate() {
            if self.moments.weight(s) <= 0.0 {
                continue;
            }
            let j = st[0];
            self.residual_coefs(theta, st, &mut c);
            jac.fill(0.0);
            jac[(0, j)] -= 1.0;
            for i in 1..=p {
                let bi = self.beta_index(j, i);
                jac[(0, st[i])] += theta[bi];
                jac[(0, bi)] += theta[st[i]];
                jac[(1 + i, bi)] = -1.0;
            }
            let m = DMatrix::from_row_slice(m_dim, m_dim, &self.moments.blocks[s]);
            let mj = &m * &jac;
            let w = self.inv_var[j];
            h += w * jac.transpose() * &mj;
            g += w * mj.transpose() * DVector::from_column_slice(&c);
        }
        (h, g)
    }

    /// Levenberg-damped Gauss–Newton; never increases the objective.
    fn minimize(&self, mut theta: Vec<f64>) -> Vec<f64> {
        let d = self.dim();
        let mut f = self.objective(&theta);
        let mut lambda = 0.0;
        for _ in 0..100 {
            let (h, g) = self.normal_equations(&theta);
            let scale = (0..d).map(|i| h[(i, i)]).fold(0.0, f64::max);
            if scale <= 0.0 {
                break;
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut a = h.clone();
                for i in 0..d {
                    a[(i, i)] += lambda * h[(i, i)] + 1e-12 * scale;
                }
                let step = match a.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        lambda = (lambda * 10.0).max(1e-8);
                        continue;
                    }
                };
                let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                let fc = self.objective(&cand);
                if fc.is_finite() && fc <= f {
                    let gain = f - fc;
                    theta = cand;
                    f = fc;
                    lambda /= 10.0;
                    improved = gain > 1e-14 * f.abs().max(f64::MIN_POSITIVE);
                    break;
                }
                lambda = (lambda * 10.0).max(1e-8);
            }
            if !improved {
                break;
            }
        }
        theta
    }
}

fn update_transition(
    params: &MsArFit,
    js: &JointSpace,
    smoothed: &[Vec<f64>],
) -> Result<TransitionMatrix> {
    let k = js.k;
    if k == 1 {
        return TransitionMatrix::new(vec![vec![1.0]]);
    }
    let mut counts = vec![vec![0.0; k]; k];
    for (tau, row) in smoothed.iter().enumerate() {
        for (idx, &w) in row.iter().enumerate() {
            if tau == 0 {
                // every consecutive pair inside the first joint state
                for lag in 1..=js.p {
                    counts[js.regime(idx, lag)][js.regime(idx, lag - 1)] += w;
                }
            } else {
                counts[js.regime(idx, 1)][js.regime(idx, 0)] += w;
            }
        }
    }
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return params.transition.rows()[i].clone();
            }
            let clamped: Vec<f64> = row
                .iter()
                .map(|c| (c / total).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
                .collect();
            let s: f64 = clamped.iter().sum();
            clamped.iter().map(|v| v / s).collect()
        })
        .collect();
    TransitionMatrix::new(rows)
}

fn m_step_floored(params: &MsArFit, series: &TimeSeries, e: &EStep, floor: f64) -> Result<MsArFit> {
    let smoothed = e
        .path
        .smoothed
        .as_ref()
        .ok_or_else(|| Error::invalid("M-step needs smoothed probabilities"))?;
    let k = params.n_regimes();
    let p = params.ar_order();
    let js = JointSpace::new(k, p);
    let y = series.values();
    if smoothed.len() + p != y.len() {
        return Err(Error::invalid("probability path does not match the series"));
    }

    let transition = update_transition(params, &js, smoothed)?;

    let moments = Moments::collect(y, p, smoothed, js.size);
    let mut loc = Location {
        js,
        states: (0..js.size).map(|s| js.decode(s)).collect(),
        moments: &moments,
        inv_var: (0..k).map(|j| 1.0 / params.variance(j)).collect(),
    };
    let mut theta: Vec<f64> = params
        .regime_means
        .iter()
        .map(|m| m - moments.center)
        .collect();
    theta.extend(params.ar_coefficients.iter().flatten());
    let theta = loc.minimize(theta);

    // variances from weighted residual sums of squares
    let mut rss = vec![0.0; k];
    let mut mass = vec![0.0; k];
    let mut c = vec![0.0; moments.dim];
    for (s, st) in loc.states.iter().enumerate() {
        let w = moments.weight(s);
        if w <= 0.0 {
            continue;
        }
        loc.residual_coefs(&theta, st, &mut c);
        rss[st[0]] += moments.quad(s, &c).max(0.0);
        mass[st[0]] += w;
    }
    let variances = match params.spec.variance_mode {
        VarianceMode::PerRegime => (0..k)
            .map(|j| {
                if mass[j] > 1e-12 {
                    (rss[j] / mass[j]).max(floor)
                } else {
                    params.variances[j]
                }
            })
            .collect(),
        VarianceMode::Shared => {
            let m: f64 = mass.iter().sum();
            vec![(rss.iter().sum::<f64>() / m).max(floor)]
        }
    };
    loc.inv_var.clear();

    let regime_means = theta[..k].iter().map(|m| m + moments.center).collect();
    let ar_coefficients = (0..k)
        .map(|j| theta[k + j * p..k + (j + 1) * p].to_vec())
        .collect();
    let initial_distribution = ergodic_distribution(&transition)?;
    Ok(MsArFit {
        spec: params.spec,
        regime_means,
        ar_coefficients,
        variances,
        transition,
        initial_distribution,
        loglik: f64::NAN,
        iterations: params.iterations,
        converged: false,
        loglik_trace: Vec::new(),
    })
}

/// One M-step from the smoothed probabilities in `e`.
pub fn m_step(params: &MsArFit, series: &TimeSeries, e: &EStep) -> Result<MsArFit> {
    let floor = VARIANCE_FLOOR_RATIO * sample_variance(series.values());
    m_step_floored(params, series, e, floor.max(f64::MIN_POSITIVE))
}

fn blend(a: &MsArFit, b: &MsArFit, w: f64) -> Result<MsArFit> {
    let mix = |x: f64, y: f64| x + w * (y - x);
    let rows = a
        .transition
        .rows()
        .iter()
        .zip(b.transition.rows())
        .map(|(ra, rb)| {
            let r: Vec<f64> = ra.iter().zip(rb).map(|(&x, &y)| mix(x, y)).collect();
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    let transition = TransitionMatrix::new(rows)?;
    let mut out = b.clone();
    out.regime_means = a
        .regime_means
        .iter()
        .zip(&b.regime_means)
        .map(|(&x, &y)| mix(x, y))
        .collect();
    out.ar_coefficients = a
        .ar_coefficients
        .iter()
        .zip(&b.ar_coefficients)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| mix(x, y)).collect())
        .collect();
    out.variances = a
        .variances
        .iter()
        .zip(&b.variances)
        .map(|(&x, &y)| mix(x, y))
        .collect();
    out.initial_distribution = ergodic_distribution(&transition)?;
    out.transition = transition;
    Ok(out)
}

fn run_em(init: MsArFit, series: &TimeSeries, cfg: &EmConfig, floor: f64) -> Result<MsArFit> {
    let mut params = init;
    let mut e = e_step(&params, series)?;
    let mut trace = vec![e.loglik];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let cand = m_step_floored(&params, series, &e, floor)?;
        let mut accepted = match e_step(&cand, series) {
            Ok(ce) if ce.loglik >= e.loglik => Some((cand.clone(), ce)),
            _ => None,
        };
        let mut w = 0.5;
        for _ in 0..MAX_STEP_HALVINGS {
            if accepted.is_some() {
                break;
            }
            if let Ok(b) = blend(&params, &cand, w) {
                if let Ok(be) = e_step(&b, series) {
                    if be.loglik >= e.loglik {
                        accepted = Some((b, be));
                    }
                }
            }
            w *= 0.5;
        }
        let Some((next, ne)) = accepted else {
            // no ascent direction left
            converged = true;
            break;
        };
        let gain = (ne.loglik - e.loglik) / e.loglik.abs().max(1.0);
        params = next;
        e = ne;
        trace.push(e.loglik);
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    if !e.loglik.is_finite() {
        return Err(Error::EstimationFailed("log-likelihood diverged".into()));
    }
    if params.variances.iter().any(|&v| v <= floor * (1.0 + 1e-9)) {
        return Err(Error::EstimationFailed(format!(
            "variance collapsed to the floor (log-likelihood {:.3})",
            e.loglik
        )));
    }
    params.canonicalize();
    params.loglik = e.loglik;
    params.iterations = iterations;
    params.converged = converged;
    params.loglik_trace = trace;
    Ok(params)
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn stabilize(beta: &mut [f64]) {
    for _ in 0..100 {
        if companion_spectral_radius(beta) < 0.98 {
            return;
        }
        beta.iter_mut().for_each(|b| *b *= 0.9);
    }
}

/// Quantile-split means and variances, whole-series AR coefficients and a
/// 0.9 diagonal; restarts other than 0 perturb all three.
fn initial_params(
    series: &TimeSeries,
    spec: MsArSpec,
    base_ar: &[f64],
    restart: usize,
    seed: u64,
    floor: f64,
) -> Result<MsArFit> {
    let k = spec.n_regimes;
    let p = spec.ar_order;
    let mut sorted = series.values()[p..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut means = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for j in 0..k {
        let group = &sorted[j * n / k..(j + 1) * n / k];
        let m = group.iter().sum::<f64>() / group.len() as f64;
        means.push(m);
        variances.push(sample_variance(group).max(floor * 10.0));
    }
    let mut betas = vec![base_ar.to_vec(); k];
    let mut stay = vec![0.9; k];

    if restart > 0 {
        let mut rng = restart_rng(seed, restart);
        let sd = sample_variance(&sorted).sqrt();
        for j in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            means[j] += 0.25 * sd * z;
            for b in betas[j].iter_mut() {
                *b *= 1.0 + rng.random_range(-0.3..0.3);
            }
            let z: f64 = rng.sample(StandardNormal);
            variances[j] *= (0.5 * z).exp();
            stay[j] = rng.random_range(0.6..0.97);
        }
    }
    for b in betas.iter_mut() {
        stabilize(b);
    }
    let transition = if k == 1 {
        TransitionMatrix::new(vec![vec![1.0]])?
    } else {
        let off = |j: usize| (1.0 - stay[j]) / (k - 1) as f64;
        TransitionMatrix::new(
            (0..k)
                .map(|i| {
                    let row: Vec<f64> = (0..k)
                        .map(|j| if i == j { stay[i] } else { off(i) })
                        .collect();
                    let s: f64 = row.iter().sum();
                    row.iter().map(|v| v / s).collect()
                })
                .collect(),
        )?
    };
    let variances = match spec.variance_mode {
        VarianceMode::PerRegime => variances,
        VarianceMode::Shared => vec![variances.iter().sum::<f64>() / k as f64],
    };
    MsArFit::new(spec, means, betas, variances, transition, None)
}

/// Maximum-likelihood MS-AR fit by EM, best of `config.restarts` starts.
/// Regimes in the result are ordered by ascending mean.
pub fn em_fit(series: &TimeSeries, spec: MsArSpec, config: &EmConfig) -> Result<MsArFit> {
    let n_params = spec.n_params();
    let y = series.values();
    if y.len() < 10 * n_params {
        return Err(Error::InsufficientData {
            what: "MS-AR estimation (10 observations per free parameter)",
            needed: 10 * n_params,
            got: y.len(),
        });
    }
    let k = spec.n_regimes;
    let n_eff = y.len() - spec.ar_order;
    if k * (spec.ar_order + 2) + k * (k - 1) > n_eff {
        return Err(Error::InsufficientData {
            what: "MS-AR identifiability",
            needed: k * (spec.ar_order + 2) + k * (k - 1) + spec.ar_order,
            got: y.len(),
        });
    }
    let var = sample_variance(y);
    if !(var > 0.0) {
        return Err(Error::EstimationFailed("series is constant".into()));
    }
    let floor = (VARIANCE_FLOOR_RATIO * var).max(f64::MIN_POSITIVE);
    let base_ar = fit_ar(series, spec.ar_order)
        .map(|f| f.coefficients)
        .unwrap_or_else(|_| vec![0.0; spec.ar_order]);

    let restarts = config.restarts.max(1);
    let attempt = |r: usize| -> Result<MsArFit> {
        let init = initial_params(series, spec, &base_ar, r, config.seed, floor)?;
        run_em(init, series, config, floor)
    };
    let results: Vec<Result<MsArFit>> = if config.parallel {
        (0..restarts).into_par_iter().map(attempt).collect()
    } else {
        (0..restarts).map(attempt).collect()
    };

    let mut best: Option<MsArFit> = None;
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => failures.push(format!("restart {r}: {e}")),
        }
    }
    if !failures.is_empty() {
        log::debug!(
            "{}: {} restart(s) failed: {}",
            spec.label(),
            failures.len(),
            failures.join("; ")
        );
    }
    best.ok_or_else(|| {
        Error::EstimationFailed(format!("all restarts failed: {}", failures.join("; ")))
    })
}

/// Residuals `y_t − E[conditional mean | all data]` for `t = p..T`, using
/// smoothed joint-state probabilities as weights.
pub fn msar_residuals(params: &MsArFit, series: &TimeSeries) -> Result<Vec<f64>> {
    let e = e_step(params, series)?;
    let smoothed = e.path.smoothed.expect("smoother output");
    let p = params.ar_order();
    let js = JointSpace::new(params.n_regimes(), p);
    let states: Vec<Vec<usize>> = (0..js.size).map(|s| js.decode(s)).collect();
    let y = series.values();
    let mut lags = vec![0.0; p];
    Ok(smoothed
        .iter()
        .enumerate()
        .map(|(tau, w)| {
            let t = p + tau;
            for i in 1..=p {
                lags[i - 1] = y[t - i];
            }
            states
                .iter()
                .zip(w)
                .map(|(st, &ws)| ws * (y[t] - params.conditional_mean(&lags, st)))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::simulate_msar;
    use super::super::testutil::two_regime;
    use super::*;
    use crate::ar::{simulate_ar, ArFit};

    #[test]
    fn single_regime_matches_least_squares() {
        let truth = ArFit {
            order: 2,
            intercept: 1.5,
            coefficients: vec![0.5, 0.2],
            innovation_variance: 1.0,
            loglik: 0.0,
            n_effective: 0,
        };
        let s = simulate_ar(&truth, 1500, 31, 200, None).unwrap();
        let ols = fit_ar(&s, 2).unwrap();
        let spec = MsArSpec::new(1, 2, VarianceMode::PerRegime).unwrap();
        let fit = em_fit(
            &s,
            spec,
            &EmConfig {
                restarts: 2,
                ..EmConfig::with_seed(1)
            },
        )
        .unwrap();
        let beta = &fit.ar_coefficients[0];
        let intercept = fit.regime_means[0] * (1.0 - beta.iter().sum::<f64>());
        assert!((intercept - ols.intercept).abs() < 1e-6);
        assert!((beta[0] - ols.coefficients[0]).abs() < 1e-6);
        assert!((beta[1] - ols.coefficients[1]).abs() < 1e-6);
        assert!((fit.variances[0] - ols.innovation_variance).abs() < 1e-6);
        assert!((fit.loglik - ols.loglik).abs() < 1e-6);
    }

    #[test]
    fn m_step_keeps_transition_stochastic() {
        let f = two_regime(
            2,
            [0.0, 6.0],
            vec![vec![0.4, 0.1], vec![0.3, 0.0]],
            vec![1.0, 2.0],
            [0.85, 0.7],
        );
        let (s, _) = simulate_msar(&f, 400, 3, 50).unwrap();
        let e = e_step(&f, &s).unwrap();
        let next = m_step(&f, &s, &e).unwrap();
        for row in next.transition.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= PROB_CLAMP * 0.999));
        }
        assert!((next.initial_distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loglik_trace_is_monotone() {
        let f = two_regime(
            1,
            [0.0, 3.0],
            vec![vec![0.6], vec![0.2]],
            vec![1.0, 0.5],
            [0.95, 0.9],
        );
        let (s, _) = simulate_msar(&f, 600, 8, 50).unwrap();
        let fit = em_fit(
            &s,
            MsArSpec::two_regime(1).unwrap(),
            &EmConfig::with_seed(5),
        )
        .unwrap();
        assert!(fit.loglik_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        assert!(fit.regime_means[0] <= fit.regime_means[1]);
        assert_eq!(*fit.loglik_trace.last().unwrap(), fit.loglik);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = TimeSeries::from_values((0..24).map(|i| (i as f64).sin()).collect()).unwrap();
        let err = em_fit(&s, MsArSpec::two_regime(4).unwrap(), &EmConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                needed: 140,
                got: 24,
                ..
            }
        ));
        assert!(err.is_estimation_failure());
    }

    #[test]
    fn parallel_and_serial_agree() {
        let f = two_regime(
            1,
            [0.0, 4.0],
            vec![vec![0.5], vec![0.3]],
            vec![1.0, 1.0],
            [0.9, 0.8],
        );
        let (s, _) = simulate_msar(&f, 500, 21, 50).unwrap();
        let spec = MsArSpec::two_regime(1).unwrap();
        let a = em_fit(
            &s,
            spec,
            &EmConfig {
                parallel: true,
                ..EmConfig::with_seed(9)
            },
        )
        .unwrap();
        let b = em_fit(
            &s,
            spec,
            &EmConfig {
                parallel: false,
                ..EmConfig::with_seed(9)
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
