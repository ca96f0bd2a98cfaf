//! Brute-force marginalization over every latent regime path. Exponential in
//! the series length; exists to cross-check the filter and smoother.

use super::{log_densities, JointSpace, MsArFit};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const ENUMERATION_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    /// Log-likelihood conditional on the first `p` observations.
    pub loglik: f64,
    /// `posteriors[t][j] = Pr(s_t = j | y_0..y_{T−1})` for every `t`.
    pub posteriors: Vec<Vec<f64>>,
}

pub fn enumerate_exact(params: &MsArFit, series: &TimeSeries) -> Result<ExactPosterior> {
    params.validate(false)?;
    let k = params.n_regimes();
    let p = params.ar_order();
    let y = series.values();
    let t_len = y.len();
    let paths = (k as u128)
        .checked_pow(t_len as u32)
        .filter(|&n| n <= ENUMERATION_LIMIT)
        .ok_or(Error::EnumerationTooLarge {
            paths: (k as u128).saturating_pow(t_len.min(128) as u32),
            limit: ENUMERATION_LIMIT,
        })? as usize;

    let js = JointSpace::new(k, p);
    let ld = if t_len > p {
        log_densities(params, y)
    } else {
        Vec::new()
    };
    let mut regimes = vec![0usize; t_len];
    let mut log_weights = Vec::with_capacity(paths);
    for code in 0..paths {
        let mut c = code;
        for r in regimes.iter_mut() {
            *r = c % k;
            c /= k;
        }
        let mut lw = params.initial_distribution[regimes[0]].ln();
        for t in 1..t_len {
            lw += params.transition.get(regimes[t - 1], regimes[t]).ln();
        }
        for t in p..t_len {
            let joint: Vec<usize> = (0..=p).map(|lag| regimes[t - lag]).collect();
            lw += ld[t - p][js.encode(&joint)];
        }
        log_weights.push(lw);
    }

    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericalDegeneracy { t: 0 });
    }
    let mut posteriors = vec![vec![0.0; k]; t_len];
    let mut total = 0.0;
    for (code, lw) in log_weights.iter().enumerate() {
        let w = (lw - max).exp();
        total += w;
        let mut c = code;
        for row in posteriors.iter_mut() {
            row[c % k] += w;
            c /= k;
        }
    }
    for row in posteriors.iter_mut() {
        row.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ExactPosterior {
        loglik: max + total.ln(),
        posteriors,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::two_regime;
    use super::*;
    use crate::regime::ergodic_distribution;

    #[test]
    fn first_observation_is_a_mixture() {
        // β = 0 and a stationary prior: y_p ~ Σ π_j N(μ_j, σ_j²)
        let f = two_regime(
            1,
            [-1.0, 2.0],
            vec![vec![0.0], vec![0.0]],
            vec![0.5, 3.0],
            [0.8, 0.6],
        );
        let s = TimeSeries::from_values(vec![7.0, 0.4]).unwrap();
        let ex = enumerate_exact(&f, &s).unwrap();
        let pi = ergodic_distribution(&f.transition).unwrap();
        let norm = |y: f64, m: f64, v: f64| {
            (-(y - m) * (y - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        };
        let mix = pi[0] * norm(0.4, -1.0, 0.5) + pi[1] * norm(0.4, 2.0, 3.0);
        assert!((ex.loglik - mix.ln()).abs() < 1e-13);
    }

    #[test]
    fn identical_regimes_return_the_prior() {
        let f = two_regime(
            1,
            [0.5, 0.5],
            vec![vec![0.2], vec![0.2]],
            vec![1.0, 1.0],
            [0.9, 0.6],
        );
        let s = TimeSeries::from_values(vec![1.0, -2.0, 3.0, 0.0, 5.0, 0.1]).unwrap();
        let ex = enumerate_exact(&f, &s).unwrap();
        let pi = ergodic_distribution(&f.transition).unwrap();
        for row in &ex.posteriors {
            assert!((row[0] - pi[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let f = two_regime(
            1,
            [0.0, 1.0],
            vec![vec![0.0], vec![0.0]],
            vec![1.0, 1.0],
            [0.5, 0.5],
        );
        let s = TimeSeries::from_values(vec![0.0; 21]).unwrap();
        assert!(matches!(
            enumerate_exact(&f, &s),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
