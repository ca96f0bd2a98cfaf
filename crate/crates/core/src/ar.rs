//! Single-regime AR(p) with intercept, fitted by conditional least squares.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::ols;
use crate::series::TimeSeries;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub(crate) fn ln_normal(residual: f64, variance: f64) -> f64 {
    -0.5 * (LN_2PI + variance.ln() + residual * residual / variance)
}

/// `y_t = intercept + Σ coefficients[i-1]·y_{t-i} + ε_t`, `ε_t ~ N(0, σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub order: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    pub loglik: f64,
    pub n_effective: usize,
}

impl ArFit {
    /// Unconditional mean `α0 / (1 − Σα)`, if finite.
    pub fn process_mean(&self) -> Option<f64> {
        let denom = 1.0 - self.coefficients.iter().sum::<f64>();
        (denom != 0.0).then(|| self.intercept / denom)
    }

    /// Free parameters: intercept, coefficients and the innovation variance.
    pub fn n_params(&self) -> usize {
        self.order + 2
    }

    /// True when every root of `1 − Σ α_i z^i` lies outside the unit circle.
    pub fn is_stationary(&self) -> bool {
        companion_spectral_radius(&self.coefficients) < 1.0
    }

    fn predict(&self, lags: impl Iterator<Item = f64>) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(lags)
                .map(|(a, y)| a * y)
                .sum::<f64>()
    }
}

pub(crate) fn companion_spectral_radius(coefs: &[f64]) -> f64 {
    let p = coefs.len();
    if p == 0 {
        return 0.0;
    }
    let mut m = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in coefs.iter().enumerate() {
        m[(0, j)] = c;
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Lagged design `[1, y_{t-1}, …, y_{t-p}]` for `t = p..T`.
pub(crate) fn lagged_design(y: &[f64], p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let n = y.len() - p;
    let x = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { y[p + r - c] });
    let target = DVector::from_iterator(n, y[p..].iter().copied());
    (x, target)
}

pub fn fit_ar(series: &TimeSeries, p: usize) -> Result<ArFit> {
    if p == 0 {
        return Err(Error::invalid("AR order must be at least 1"));
    }
    let y = series.values();
    if y.len() < p + 10 {
        return Err(Error::InsufficientData {
            what: "AR fit",
            needed: p + 10,
            got: y.len(),
        });
    }
    let (x, target) = lagged_design(y, p);
    let fit = ols(x, &target, "AR lagged design")?;
    let n_effective = y.len() - p;
    // an exact recursion leaves RSS = 0; keep σ² representable
    let innovation_variance = (fit.rss / n_effective as f64).max(f64::MIN_POSITIVE);
    let mut out = ArFit {
        order: p,
        intercept: fit.coef[0],
        coefficients: fit.coef.iter().skip(1).copied().collect(),
        innovation_variance,
        loglik: 0.0,
        n_effective,
    };
    out.loglik = ar_loglik(&out, series)?;
    Ok(out)
}

pub fn ar_residuals(fit: &ArFit, series: &TimeSeries) -> Result<Vec<f64>> {
    let y = series.values();
    let p = fit.order;
    if fit.coefficients.len() != p {
        return Err(Error::invalid(format!(
            "AR fit declares order {p} but carries {} coefficients",
            fit.coefficients.len()
        )));
    }
    if y.len() <= p {
        return Err(Error::InsufficientData {
            what: "AR residuals",
            needed: p + 1,
            got: y.len(),
        });
    }
    Ok((p..y.len())
        .map(|t| y[t] - fit.predict((1..=p).map(|i| y[t - i])))
        .collect())
}

pub fn ar_loglik(fit: &ArFit, series: &TimeSeries) -> Result<f64> {
    if !(fit.innovation_variance > 0.0) {
        return Err(Error::invalid("innovation variance must be positive"));
    }
    let resid = ar_residuals(fit, series)?;
    Ok(resid
        .iter()
        .map(|&e| ln_normal(e, fit.innovation_variance))
        .sum())
}

/// Simulates `n` observations after discarding `burn_in`. Without `initial`
/// values the lags start at the process mean, which requires a stationary
/// polynomial. A zero innovation variance gives the deterministic recursion.
pub fn simulate_ar(
    fit: &ArFit,
    n: usize,
    seed: u64,
    burn_in: usize,
    initial: Option<&[f64]>,
) -> Result<TimeSeries> {
    let p = fit.order;
    if n == 0 {
        return Err(Error::invalid("simulation length must be at least 1"));
    }
    if fit.coefficients.len() != p || !(fit.innovation_variance >= 0.0) {
        return Err(Error::invalid("malformed AR parameters"));
    }
    let mut lags: Vec<f64> = match initial {
        Some(init) => {
            if init.len() != p {
                return Err(Error::invalid(format!(
                    "need {p} initial values, got {}",
                    init.len()
                )));
            }
            // most recent first
            init.iter().rev().copied().collect()
        }
        None => {
            if !fit.is_stationary() {
                return Err(Error::invalid(
                    "explosive AR polynomial; pass initial values explicitly",
                ));
            }
            vec![fit.process_mean().unwrap_or(0.0); p]
        }
    };
    let sd = fit.innovation_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        let eps: f64 = rng.sample(StandardNormal);
        let y = fit.predict(lags.iter().copied()) + sd * eps;
        lags.rotate_right(1);
        lags[0] = y;
        if t >= burn_in {
            out.push(y);
        }
    }
    TimeSeries::from_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(v).unwrap()
    }

    fn truth(intercept: f64, coefficients: Vec<f64>, variance: f64) -> ArFit {
        ArFit {
            order: coefficients.len(),
            intercept,
            coefficients,
            innovation_variance: variance,
            loglik: 0.0,
            n_effective: 0,
        }
    }

    #[test]
    fn noiseless_recursion_is_recovered_exactly() {
        let mut y = vec![0.0];
        for t in 1..100 {
            y.push(2.0 + 0.5 * y[t - 1]);
        }
        let s = ts(y);
        let f = fit_ar(&s, 1).unwrap();
        assert!((f.intercept - 2.0).abs() < 1e-9);
        assert!((f.coefficients[0] - 0.5).abs() < 1e-9);
        assert!(f.innovation_variance < 1e-20);
        assert!(ar_residuals(&f, &s).unwrap().iter().all(|e| e.abs() < 1e-9));
    }

    #[test]
    fn ar2_recovery() {
        let s = simulate_ar(&truth(1.0, vec![0.4, 0.3], 1.0), 10_000, 3, 500, None).unwrap();
        let f = fit_ar(&s, 2).unwrap();
        assert!((f.coefficients[0] - 0.4).abs() < 0.03);
        assert!((f.coefficients[1] - 0.3).abs() < 0.03);
        assert_eq!(f.n_effective, 9_998);
    }

    #[test]
    fn matches_normal_equations() {
        let s = simulate_ar(&truth(0.3, vec![0.6, -0.2], 1.0), 50, 8, 20, None).unwrap();
        let f = fit_ar(&s, 2).unwrap();
        // oracle: (XᵀX)β = Xᵀy solved by Gauss-Jordan elimination
        let y = s.values();
        let rows: Vec<[f64; 3]> = (2..50).map(|t| [1.0, y[t - 1], y[t - 2]]).collect();
        let mut a = [[0.0f64; 4]; 3];
        for (r, t) in rows.iter().zip(2..50) {
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += r[i] * r[j];
                }
                a[i][3] += r[i] * y[t];
            }
        }
        for c in 0..3 {
            let piv = a[c][c];
            for j in 0..4 {
                a[c][j] /= piv;
            }
            for r in 0..3 {
                if r != c {
                    let m = a[r][c];
                    for j in 0..4 {
                        a[r][j] -= m * a[c][j];
                    }
                }
            }
        }
        assert!((f.intercept - a[0][3]).abs() < 1e-10);
        assert!((f.coefficients[0] - a[1][3]).abs() < 1e-10);
        assert!((f.coefficients[1] - a[2][3]).abs() < 1e-10);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_ar(&ts(vec![3.0; 40]), 2),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            fit_ar(&ts(vec![1.0; 11]), 2),
            Err(Error::InsufficientData { .. })
        ));
        assert!(fit_ar(&ts(vec![1.0; 20]), 0).is_err());
    }

    #[test]
    fn loglik_hand_cases() {
        let f = truth(0.0, vec![1.0], 1.0);
        let at_zero = ar_loglik(&f, &ts(vec![2.0, 2.0])).unwrap();
        assert!((at_zero + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        let unit = ar_loglik(&f, &ts(vec![2.0, 3.0])).unwrap();
        assert!((unit - (-0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5)).abs() < 1e-15);
        assert!(ar_loglik(&truth(0.0, vec![1.0], 0.0), &ts(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn loglik_matches_density_sum() {
        let s = simulate_ar(&truth(0.5, vec![0.7], 2.0), 300, 4, 50, None).unwrap();
        let f = fit_ar(&s, 1).unwrap();
        let y = s.values();
        let oracle: f64 = (1..y.len())
            .map(|t| {
                let m = f.intercept + f.coefficients[0] * y[t - 1];
                let v = f.innovation_variance;
                (-(y[t] - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            })
            .map(f64::ln)
            .sum();
        assert!((f.loglik - oracle).abs() < 1e-10);
    }

    #[test]
    fn hand_residuals() {
        let f = truth(1.0, vec![0.5], 1.0);
        let r = ar_residuals(&f, &ts(vec![2.0, 1.0, 4.0, 3.0, 0.0])).unwrap();
        assert_eq!(r, vec![-1.0, 2.5, 0.0, -2.5]);
        assert!(ar_residuals(&truth(0.0, vec![0.1, 0.2], 1.0), &ts(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let s = simulate_ar(&truth(2.0, vec![0.5, 0.2], 1.0), 2000, 5, 100, None).unwrap();
        let f = fit_ar(&s, 2).unwrap();
        let e = ar_residuals(&f, &s).unwrap();
        let y = s.values();
        let n = e.len() as f64;
        for lag in 1..=2 {
            let dot: f64 = e.iter().enumerate().map(|(i, r)| r * y[i + 2 - lag]).sum();
            assert!(dot.abs() < 1e-6 * n);
        }
        assert!((e.iter().sum::<f64>() / n).abs() < 1e-8);
    }

    #[test]
    fn simulation_fixed_point_and_determinism() {
        let f = truth(1.0, vec![0.5], 0.0);
        let s = simulate_ar(&f, 10, 1, 0, Some(&[2.0])).unwrap();
        assert!(s.values().iter().all(|&v| v == 2.0));

        let g = truth(0.0, vec![0.8], 1.0);
        let a = simulate_ar(&g, 500, 77, 10, None).unwrap();
        let b = simulate_ar(&g, 500, 77, 10, None).unwrap();
        assert_eq!(a, b);

        let explosive = truth(0.0, vec![1.2], 1.0);
        assert!(simulate_ar(&explosive, 10, 1, 0, None).is_err());
        assert!(simulate_ar(&explosive, 10, 1, 0, Some(&[0.1])).is_ok());
    }

    #[test]
    fn stationary_variance() {
        let g = truth(0.0, vec![0.8], 1.0);
        let s = simulate_ar(&g, 50_000, 21, 1000, None).unwrap();
        let m = s.mean();
        let var = s.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / 49_999.0;
        assert!((var / (1.0 / 0.36) - 1.0).abs() < 0.05);
    }

    #[test]
    fn fitted_coefficients_are_a_local_maximum() {
        use rand::Rng;
        let s = simulate_ar(&truth(1.0, vec![0.5, 0.1], 1.0), 1500, 6, 100, None).unwrap();
        let f = fit_ar(&s, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let mut g = f.clone();
            g.intercept += rng.random_range(-0.01..0.01);
            for c in &mut g.coefficients {
                *c += rng.random_range(-0.01..0.01);
            }
            assert!(ar_loglik(&g, &s).unwrap() <= f.loglik);
        }
    }

    #[test]
    fn recovery_error_shrinks_with_n() {
        let g = truth(1.0, vec![0.6], 1.0);
        let err = |n: usize| -> f64 {
            (0..20)
                .map(|seed| {
                    let s = simulate_ar(&g, n, 100 + seed, 200, None).unwrap();
                    (fit_ar(&s, 1).unwrap().coefficients[0] - 0.6).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        };
        let (small, large) = (err(1000), err(10_000));
        // √10 ≈ 3.16 theoretically; allow Monte-Carlo slack
        assert!(small / large > 2.0, "{small} vs {large}");
    }
}
