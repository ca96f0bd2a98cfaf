use msar::ar::fit_ar;
use msar::diagnostics::{adf_test, durbin_watson, info_criteria, pp_test, DeterministicVariant};
use msar::io::{load_csv, FitReport, FitSection, LoadOptions, MissingPolicy, Provenance};
use msar::regime::{
    e_step, em_fit, ergodic_distribution, expected_duration, hamilton_filter, kim_smoother, loglik,
    m_step, simulate_msar, EmConfig, MsArFit, MsArSpec, TransitionMatrix, VarianceMode,
};
use msar::series::{acf, describe, deseasonalize, reseasonalize, seasonal_profile, TimeSeries};
use proptest::prelude::*;

fn series_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, min..max)
        .prop_filter("non-constant", |v| v.iter().any(|&x| x != v[0]))
}

fn stochastic_row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, k).prop_map(|r| {
        let s: f64 = r.iter().sum();
        r.iter().map(|v| v / s).collect()
    })
}

fn transition(k: usize) -> impl Strategy<Value = TransitionMatrix> {
    prop::collection::vec(stochastic_row(k), k)
        .prop_map(|rows| TransitionMatrix::new(rows).unwrap())
}

prop_compose! {
    fn two_regime_model(p: usize)(
        m0 in -3.0..0.0f64,
        gap in 0.5..6.0f64,
        beta in prop::collection::vec(-0.4..0.4f64, 2 * p),
        v in prop::collection::vec(0.2..3.0f64, 2),
        stay in prop::collection::vec(0.05..0.95f64, 2),
    ) -> MsArFit {
        let t = TransitionMatrix::new(vec![
            vec![stay[0], 1.0 - stay[0]],
            vec![1.0 - stay[1], stay[1]],
        ]).unwrap();
        MsArFit::new(
            MsArSpec::new(2, p, VarianceMode::PerRegime).unwrap(),
            vec![m0, m0 + gap],
            vec![beta[..p].to_vec(), beta[p..].to_vec()],
            v,
            t,
            None,
        ).unwrap()
    }
}

fn ts(v: Vec<f64>) -> TimeSeries {
    TimeSeries::from_values(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn describe_is_permutation_invariant(v in series_strategy(3, 60), seed in any::<u64>()) {
        let mut w = v.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(w.as_mut_slice(), &mut rng);
        let a = describe(&ts(v.clone())).unwrap();
        let b = describe(&ts(w)).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-12 * a.mean.abs().max(1.0));
        prop_assert!((a.std_dev - b.std_dev).abs() <= 1e-10 * a.std_dev.max(1.0));
        let neg = describe(&ts(v.iter().map(|x| -x).collect())).unwrap();
        prop_assert_eq!(a.skewness.map(|s| -s), neg.skewness);
    }

    #[test]
    fn acf_bounded_and_affine_invariant(v in series_strategy(20, 80), a in -50.0..50.0f64, b in 0.1..20.0f64) {
        let r = acf(&ts(v.clone()), 10).unwrap();
        prop_assert!(r.coefficients.iter().all(|c| c.abs() <= 1.0));
        let r2 = acf(&ts(v.iter().map(|x| a + b * x).collect()), 10).unwrap();
        for (x, y) in r.coefficients.iter().zip(&r2.coefficients) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn deseasonalize_round_trips(cycles in 2usize..6, period in 2usize..30, v in prop::collection::vec(-100.0..100.0f64, 180)) {
        let n = cycles * period;
        let s = ts(v[..n.min(180)].to_vec());
        prop_assume!(s.len() >= 2 * period);
        let prof = seasonal_profile(&s, period).unwrap();
        let d = deseasonalize(&s, &prof).unwrap();
        let back = reseasonalize(&d, &prof).unwrap();
        for (x, y) in back.values().iter().zip(s.values()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        if s.len() % period == 0 {
            let again = seasonal_profile(&d, period).unwrap();
            prop_assert!(again.offsets.iter().all(|o| o.abs() < 1e-9));
        }
    }

    #[test]
    fn ar_residuals_have_zero_mean(v in series_strategy(40, 120), p in 1usize..4) {
        if let Ok(fit) = fit_ar(&ts(v.clone()), p) {
            let e = msar::ar::ar_residuals(&fit, &ts(v)).unwrap();
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            let scale = e.iter().map(|x| x.abs()).fold(1.0, f64::max);
            prop_assert!(mean.abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn durbin_watson_properties(e in series_strategy(2, 100), c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]) {
        let d = durbin_watson(&e).unwrap();
        prop_assert!((0.0..=4.0).contains(&d));
        let neg: Vec<f64> = e.iter().map(|x| -x).collect();
        prop_assert_eq!(durbin_watson(&neg).unwrap(), d);
        let scaled: Vec<f64> = e.iter().map(|x| c * x).collect();
        prop_assert!((durbin_watson(&scaled).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn criteria_rank_like_loglik_at_equal_k(l1 in -1e5..0.0f64, l2 in -1e5..0.0f64, k in 0usize..30, n in 3usize..100_000) {
        let a = info_criteria(l1, k, n).unwrap();
        let b = info_criteria(l2, k, n).unwrap();
        let by_ll = l1 > l2;
        if l1 != l2 {
            prop_assert_eq!(a.aic < b.aic, by_ll);
            prop_assert_eq!(a.bic < b.bic, by_ll);
            prop_assert_eq!(a.hqc < b.hqc, by_ll);
        }
        let a2 = info_criteria(l1, k + 1, n).unwrap();
        prop_assert!(a2.aic > a.aic && a2.bic > a.bic && a2.hqc > a.hqc);
    }

    #[test]
    fn expected_duration_at_least_one(t in (2usize..5).prop_flat_map(transition)) {
        for d in expected_duration(&t).unwrap() {
            prop_assert!(d >= 1.0);
        }
        let pi = ergodic_distribution(&t).unwrap();
        for j in 0..t.n_regimes() {
            let pj: f64 = (0..t.n_regimes()).map(|i| pi[i] * t.get(i, j)).sum();
            prop_assert!((pj - pi[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn probability_rows_are_normalized(params in (1usize..3).prop_flat_map(two_regime_model), seed in any::<u64>()) {
        let (y, _) = simulate_msar(&params, 60, seed, 10).unwrap();
        let (f, _) = hamilton_filter(&params, &y).unwrap();
        let s = kim_smoother(&params, &f).unwrap();
        for rows in [&s.predicted, &s.filtered, s.smoothed.as_ref().unwrap()] {
            for row in rows.iter() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
        let e = e_step(&params, &y).unwrap();
        let next = m_step(&params, &y, &e).unwrap();
        for row in next.transition.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loglik_invariant_under_relabeling(params in (1usize..3).prop_flat_map(two_regime_model), seed in any::<u64>()) {
        let (y, _) = simulate_msar(&params, 50, seed, 10).unwrap();
        let swapped = MsArFit::new(
            params.spec,
            vec![params.regime_means[1], params.regime_means[0]],
            vec![params.ar_coefficients[1].clone(), params.ar_coefficients[0].clone()],
            vec![params.variances[1], params.variances[0]],
            TransitionMatrix::new(vec![
                vec![params.transition.get(1, 1), params.transition.get(1, 0)],
                vec![params.transition.get(0, 1), params.transition.get(0, 0)],
            ]).unwrap(),
            None,
        ).unwrap();
        let a = loglik(&params, &y).unwrap();
        let b = loglik(&swapped, &y).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        let mut canon = swapped.clone();
        canon.canonicalize();
        prop_assert_eq!(canon.regime_means, params.regime_means);
    }

    #[test]
    fn unit_root_statistics_are_scale_free(v in prop::collection::vec(-10.0..10.0f64, 40..120), c in 0.01..100.0f64) {
        // random walk built from bounded increments
        let y: Vec<f64> = v.iter().scan(0.0, |acc, e| { *acc += e; Some(*acc) }).collect();
        let scaled: Vec<f64> = y.iter().map(|x| c * x).collect();
        for variant in [DeterministicVariant::None, DeterministicVariant::Constant, DeterministicVariant::ConstantTrend] {
            let a = adf_test(&ts(y.clone()), variant, Some(2)).unwrap();
            let b = adf_test(&ts(scaled.clone()), variant, Some(2)).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-8 * a.statistic.abs().max(1.0));
        }
        for variant in [DeterministicVariant::Constant, DeterministicVariant::ConstantTrend] {
            let a = pp_test(&ts(y.clone()), variant).unwrap();
            let b = pp_test(&ts(scaled.clone()), variant).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-8 * a.statistic.abs().max(1.0));
            prop_assert_eq!(a.reject_unit_root, a.statistic < a.critical_value_5pct);
        }
    }

    #[test]
    fn load_csv_never_panics(body in "[0-9T:Z,;. \\-a-z\n]{0,300}") {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, format!("timestamp,load_mw\n{body}").as_bytes()).unwrap();
        for missing in [MissingPolicy::Error, MissingPolicy::Interpolate, MissingPolicy::DropLeadingTrailing] {
            let opts = LoadOptions { missing, ..LoadOptions::default() };
            if let Ok(out) = load_csv(f.path(), &opts) {
                prop_assert!(!out.series.is_empty());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn em_trace_is_monotone(params in two_regime_model(1), seed in any::<u64>(), noise in prop::collection::vec(-3.0..3.0f64, 120)) {
        // arbitrary input: a simulated path plus bounded distortion
        let (y, _) = simulate_msar(&params, 120, seed, 10).unwrap();
        let y = ts(y.values().iter().zip(&noise).map(|(a, b)| a + b * b * b).collect());
        let config = EmConfig { restarts: 2, max_iter: 60, ..EmConfig::with_seed(seed) };
        if let Ok(fit) = em_fit(&y, MsArSpec::two_regime(1).unwrap(), &config) {
            for w in fit.loglik_trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
            }
            prop_assert!(fit.regime_means[0] <= fit.regime_means[1]);
        }
    }

    #[test]
    fn report_json_round_trips(params in two_regime_model(2), ll in -1e6..0.0f64) {
        let mut fit = params;
        fit.loglik = ll;
        fit.loglik_trace = vec![ll - 1.0, ll];
        let mut r = FitReport::new(Provenance::new(Some(3), None));
        r.chosen_fit = Some(FitSection::from_fit(&fit));
        let json = r.to_json().unwrap();
        let back = FitReport::from_json(&json).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.to_json().unwrap(), json);
    }
}
