use nalgebra::{DMatrix, DVector};

use super::TransitionMatrix;
use crate::error::{Error, Result};

/// Mean consecutive stay in each regime, `1 / (1 − p_jj)`, in series steps.
pub fn expected_duration(transition: &TransitionMatrix) -> Result<Vec<f64>> {
    transition
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(regime, p)| {
            if p >= 1.0 {
                Err(Error::InfiniteDuration { regime })
            } else {
                Ok(1.0 / (1.0 - p))
            }
        })
        .collect()
}

/// `1 / (1 − p_ij)` for every entry. The diagonal is the expected duration;
/// off-diagonal entries are the "transitional duration" figures some
/// load-modelling reports quote for regime changes. They are not the mean
/// time until a switch, which is the diagonal quantity.
pub fn transition_durations(transition: &TransitionMatrix) -> Vec<Vec<f64>> {
    transition
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| {
                    if p >= 1.0 {
                        f64::INFINITY
                    } else {
                        1.0 / (1.0 - p)
                    }
                })
                .collect()
        })
        .collect()
}

fn is_irreducible(transition: &TransitionMatrix) -> bool {
    let k = transition.n_regimes();
    (0..k).all(|start| {
        let mut seen = vec![false; k];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                if !seen[j] && transition.get(i, j) > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    })
}

/// Stationary distribution `π` with `πP = π`, `Σπ = 1`.
pub fn ergodic_distribution(transition: &TransitionMatrix) -> Result<Vec<f64>> {
    let k = transition.n_regimes();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    if !is_irreducible(transition) {
        return Err(Error::ReducibleChain);
    }
    // (Pᵀ − I)π = 0 with the last equation replaced by Σπ = 1
    let mut a = DMatrix::from_fn(k, k, |i, j| {
        transition.get(j, i) - if i == j { 1.0 } else { 0.0 }
    });
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(Error::ReducibleChain)?;
    let mut pi: Vec<f64> = pi.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}
