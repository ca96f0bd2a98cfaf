//! Independent reference computations checked against the library.

use msar::ar::{ar_loglik, fit_ar, ArFit};
use msar::regime::{
    enumerate_exact, hamilton_filter, kim_smoother, MsArFit, MsArSpec, TransitionMatrix,
    VarianceMode,
};
use msar::series::{pacf, TimeSeries};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_params(rng: &mut ChaCha8Rng, p: usize) -> MsArFit {
    let stay = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
    let transition = TransitionMatrix::new(vec![
        vec![stay[0], 1.0 - stay[0]],
        vec![1.0 - stay[1], stay[1]],
    ])
    .unwrap();
    let beta = (0..2)
        .map(|_| (0..p).map(|_| rng.random_range(-0.45..0.45)).collect())
        .collect();
    MsArFit::new(
        MsArSpec::new(2, p, VarianceMode::PerRegime).unwrap(),
        vec![rng.random_range(-2.0..0.0), rng.random_range(0.0..3.0)],
        beta,
        vec![rng.random_range(0.3..2.0), rng.random_range(0.3..2.0)],
        transition,
        None,
    )
    .unwrap()
}

fn random_series(rng: &mut ChaCha8Rng, n: usize) -> TimeSeries {
    TimeSeries::from_values(
        (0..n)
            .map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
    .unwrap()
}

#[test]
fn filter_and_smoother_match_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..60 {
        let p = 1 + case % 2;
        let n = rng.random_range(p + 1..=10);
        let params = random_params(&mut rng, p);
        let y = random_series(&mut rng, n);

        let exact = enumerate_exact(&params, &y).unwrap();
        let (filtered, ll) = hamilton_filter(&params, &y).unwrap();
        assert!(
            (ll - exact.loglik).abs() < 1e-10,
            "case {case}: {ll} vs {}",
            exact.loglik
        );

        let smoothed = kim_smoother(&params, &filtered)
            .unwrap()
            .smoothed_marginals()
            .unwrap();
        for (tau, row) in smoothed.iter().enumerate() {
            for j in 0..2 {
                let want = exact.posteriors[p + tau][j];
                assert!(
                    (row[j] - want).abs() < 1e-10,
                    "case {case} t={} j={j}",
                    p + tau
                );
            }
        }

        // filtered at t is the full posterior of the truncated sample y_0..y_t
        let fm = filtered.filtered_marginals();
        for (tau, row) in fm.iter().enumerate() {
            let t = p + tau;
            let head = TimeSeries::from_values(y.values()[..=t].to_vec()).unwrap();
            let ex = enumerate_exact(&params, &head).unwrap();
            assert!(
                (row[0] - ex.posteriors[t][0]).abs() < 1e-10,
                "case {case} filtered t={t}"
            );
        }
    }
}

#[test]
fn single_regime_likelihood_equals_ar_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in 1..=3 {
        let y = random_series(&mut rng, 80);
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-0.3..0.3)).collect();
        let mu = 0.7;
        let var = 1.3;
        let ms = MsArFit::new(
            MsArSpec::new(1, p, VarianceMode::PerRegime).unwrap(),
            vec![mu],
            vec![beta.clone()],
            vec![var],
            TransitionMatrix::new(vec![vec![1.0]]).unwrap(),
            None,
        )
        .unwrap();
        let ar = ArFit {
            order: p,
            intercept: mu * (1.0 - beta.iter().sum::<f64>()),
            coefficients: beta,
            innovation_variance: var,
            loglik: 0.0,
            n_effective: 80 - p,
        };
        let a = msar::regime::loglik(&ms, &y).unwrap();
        let b = ar_loglik(&ar, &y).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs(), "p={p}: {a} vs {b}");
    }
}

/// Lag-k partial autocorrelation as the last coefficient of the order-k
/// Yule–Walker system on the sample autocorrelations.
fn yule_walker_pacf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let c = |k: usize| (0..n - k).map(|t| (x[t] - m) * (x[t + k] - m)).sum::<f64>();
    let r: Vec<f64> = (0..=max_lag).map(|k| c(k) / c(0)).collect();
    (1..=max_lag)
        .map(|k| {
            let a = DMatrix::from_fn(k, k, |i, j| r[i.abs_diff(j)]);
            let b = DVector::from_fn(k, |i, _| r[i + 1]);
            a.lu().solve(&b).unwrap()[k - 1]
        })
        .collect()
}

#[test]
fn pacf_matches_yule_walker_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let mut x = vec![0.0; 200];
        for t in 2..200 {
            x[t] = 0.6 * x[t - 1] - 0.2 * x[t - 2] + rng.sample::<f64, _>(StandardNormal);
        }
        let got = pacf(&TimeSeries::from_values(x.clone()).unwrap(), 10).unwrap();
        let want = yule_walker_pacf(&x, 10);
        for k in 1..=10 {
            assert!((got.at(k).unwrap() - want[k - 1]).abs() < 1e-8, "lag {k}");
        }
    }
}

#[test]
fn ar_fit_solves_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut x = vec![0.0; 300];
    for t in 3..300 {
        x[t] = 1.0 + 0.4 * x[t - 1] + 0.1 * x[t - 3] + rng.sample::<f64, _>(StandardNormal);
    }
    let fit = fit_ar(&TimeSeries::from_values(x.clone()).unwrap(), 3).unwrap();
    // XᵀX β = Xᵀy by explicit Cholesky on the cross-products
    let rows = 297;
    let design = DMatrix::from_fn(rows, 4, |r, c| if c == 0 { 1.0 } else { x[3 + r - c] });
    let target = DVector::from_fn(rows, |r, _| x[3 + r]);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * target;
    let beta = xtx.cholesky().unwrap().solve(&xty);
    assert!((fit.intercept - beta[0]).abs() < 1e-9);
    for i in 0..3 {
        assert!((fit.coefficients[i] - beta[i + 1]).abs() < 1e-9);
    }
}
