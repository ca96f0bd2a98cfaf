use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ergodic_distribution, MsArFit, RegimePath};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws `burn_in + n` steps and keeps the last `n`, returning observations
/// and the true latent regimes. The chain starts from its ergodic
/// distribution, or from `initial_distribution` when the chain is reducible.
/// Zero variances are allowed and give a noiseless recursion.
pub fn simulate_msar(
    params: &MsArFit,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<(TimeSeries, RegimePath)> {
    params.validate(true)?;
    if n == 0 {
        return Err(Error::invalid("simulation length must be at least 1"));
    }
    let p = params.ar_order();
    let start = ergodic_distribution(&params.transition)
        .unwrap_or_else(|_| params.initial_distribution.clone());
    let sd: Vec<f64> = (0..params.n_regimes())
        .map(|j| params.variance(j).sqrt())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = draw(&mut rng, &start);
    // deviations y_{t−i} − μ(s_{t−i}), most recent first; presample at the mean
    let mut dev = vec![0.0; p];
    let mut values = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        if t > 0 {
            state = draw(&mut rng, &params.transition.rows()[state]);
        }
        let eps: f64 = rng.sample(StandardNormal);
        let beta = &params.ar_coefficients[state];
        let d: f64 = beta.iter().zip(&dev).map(|(b, d)| b * d).sum::<f64>() + sd[state] * eps;
        if p > 0 {
            dev.rotate_right(1);
            dev[0] = d;
        }
        if t >= burn_in {
            values.push(params.regime_means[state] + d);
            labels.push(state + 1);
        }
    }
    Ok((
        TimeSeries::from_values(values)?,
        RegimePath {
            labels,
            source: None,
        },
    ))
}
