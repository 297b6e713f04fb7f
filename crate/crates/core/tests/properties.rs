use mspl::*;
use proptest::prelude::*;

fn spd(p: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_fn(p, p, |i, j| entries[i * p + j]);
    let m = &b * b.transpose() / p as f64 + DMatrix::identity(p, p) * 0.25;
    (&m + m.transpose()) * 0.5
}

fn params_strategy(p: usize, q: usize) -> impl Strategy<Value = FactorParams> {
    (
        prop::collection::vec(-1.0..1.0f64, p * q),
        prop::collection::vec(0.2..2.0f64, p),
    )
        .prop_map(move |(l, s)| {
            FactorParams::new(DMatrix::from_row_slice(p, q, &l), DVector::from_vec(s)).unwrap()
        })
}

fn givens(q: usize, angle: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(q, q);
    let (s, c) = angle.sin_cos();
    r[(0, 0)] = c;
    r[(0, 1)] = -s;
    r[(1, 0)] = s;
    r[(1, 1)] = c;
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrepancy_is_nonnegative_and_zero_on_the_diagonal(
        a in prop::collection::vec(-1.0..1.0f64, 16),
        b in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let (s1, s2) = (spd(4, &a), spd(4, &b));
        prop_assert!(discrepancy(&s1, &s2).unwrap() >= 0.0);
        prop_assert!(discrepancy(&s1, &s1).unwrap().abs() < 1e-10);
    }

    #[test]
    fn likelihood_and_penalties_ignore_rotation(
        params in params_strategy(5, 2),
        cov in prop::collection::vec(-1.0..1.0f64, 25),
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let m = SampleMoments::from_covariance(spd(5, &cov), 80).unwrap();
        let rotated = params.rotated(&givens(2, angle)).unwrap();
        let l0 = log_likelihood(&params, &m).unwrap();
        let l1 = log_likelihood(&rotated, &m).unwrap();
        prop_assert!((l0 - l1).abs() <= 1e-9 * l0.abs().max(1.0));
        for fam in [PenaltyFamily::LoadingTrace, PenaltyFamily::SampleVariance] {
            let spec = PenaltySpec::soft(fam);
            let p0 = penalty_value(&spec, &params, &m).unwrap();
            let p1 = penalty_value(&spec, &rotated, &m).unwrap();
            prop_assert!((p0 - p1).abs() <= 1e-9 * p0.abs().max(1.0));
            prop_assert!(p0 <= 0.0);
        }
        prop_assert!((communalities(&params) - communalities(&rotated)).amax() < 1e-12);
    }

    #[test]
    fn rescaling_shifts_loglik_by_the_jacobian(
        params in params_strategy(4, 1),
        cov in prop::collection::vec(-1.0..1.0f64, 16),
        scale in prop::collection::vec(0.3..3.0f64, 4),
    ) {
        let n = 60;
        let m = SampleMoments::from_covariance(spd(4, &cov), n).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(scale.clone()));
        let ms = SampleMoments::from_covariance(&d * m.cov() * &d, n).unwrap();
        let lam = &d * params.loadings();
        let psi = DVector::from_fn(4, |j, _| params.uniquenesses()[j] * scale[j] * scale[j]);
        let scaled = FactorParams::new(lam, psi).unwrap();
        let jac: f64 = scale.iter().map(|s| s.ln()).sum::<f64>() * n as f64;
        let l0 = log_likelihood(&params, &m).unwrap();
        let l1 = log_likelihood(&scaled, &ms).unwrap();
        prop_assert!((l0 - (l1 + jac)).abs() <= 1e-9 * l0.abs().max(1.0));
        for fam in [PenaltyFamily::LoadingTrace, PenaltyFamily::SampleVariance] {
            let spec = PenaltySpec::vanilla(fam, 0.5).unwrap();
            let p0 = penalty_value(&spec, &params, &m).unwrap();
            let p1 = penalty_value(&spec, &scaled, &ms).unwrap();
            prop_assert!((p0 - p1).abs() <= 1e-9 * p0.abs().max(1.0));
        }
    }

    #[test]
    fn information_criteria_gap_matches_parameter_count(
        loglik in -1e4..0.0f64,
        p in 3usize..12,
        n in 20usize..2000,
        q_frac in 0.0..1.0f64,
    ) {
        let q = 1 + ((p - 2) as f64 * q_frac) as usize;
        let (aic, bic) = information_criteria(loglik, p, q, n);
        let k = free_parameter_count(p, q) as f64;
        prop_assert!(((bic - aic) - k * ((n as f64).ln() - 2.0)).abs() < 1e-9 * bic.abs().max(1.0));
    }
}

#[test]
fn fitting_standardised_data_matches_fitting_the_covariance() {
    let data = generate_data(&LoadingSetting::A3, 300, 5, 0).unwrap();
    let moments = sample_moments(&data).unwrap();
    let corr = moments.to_correlation().unwrap();
    let spec = PenaltySpec::soft(PenaltyFamily::SampleVariance);
    let opts = FitOptions::default();
    let a = fit(&moments, 3, &spec, &opts).unwrap();
    let b = fit(&corr, 3, &spec, &opts).unwrap();
    let sd = moments.cov().diagonal().map(f64::sqrt);
    let la = a.params.loadings();
    let lb = b.params.loadings();
    for i in 0..9 {
        for j in 0..9 {
            let x = la.row(i).dot(&la.row(j)) / (sd[i] * sd[j]);
            assert!((x - lb.row(i).dot(&lb.row(j))).abs() < 1e-6);
        }
    }
}

#[test]
fn study_reports_are_reproducible_and_order_free() {
    let cfg = SimulationConfig::new(LoadingSetting::B3, 80, 12, 99).with_estimators(vec![
        PenaltySpec::none(),
        PenaltySpec::soft(PenaltyFamily::LoadingTrace),
    ]);
    let a = run_study(&cfg).unwrap();
    let b = run_study(&cfg).unwrap();
    assert_eq!(a.estimators, b.estimators);
    assert_eq!(a.outcomes, b.outcomes);

    // replicate r of a larger study is the same draw
    let mut bigger = cfg.clone();
    bigger.replicates = 20;
    let c = run_study(&bigger).unwrap();
    for o in &a.outcomes {
        let same = c
            .outcomes
            .iter()
            .find(|x| x.replicate == o.replicate && x.estimator == o.estimator)
            .unwrap();
        assert_eq!(same, o);
    }
}

#[test]
fn selection_study_tallies_sum_to_one_hundred() {
    let cfg = SimulationConfig::new(LoadingSetting::A3, 120, 8, 3)
        .with_estimators(vec![PenaltySpec::soft(PenaltyFamily::SampleVariance)])
        .with_q_grid(vec![1, 2, 3, 4]);
    let r = run_study(&cfg).unwrap();
    let t = r.estimators[0].selection.as_ref().unwrap();
    assert!((t.bic_percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    assert!((t.aic_percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    assert_eq!(t.bic_counts.iter().sum::<usize>(), 8);
}

#[test]
fn large_sample_covariance_approaches_the_population() {
    let data = generate_data(&LoadingSetting::A3, 1_000_000, 1, 0).unwrap();
    let m = sample_moments(&data).unwrap();
    let sigma = assemble_sigma(&LoadingSetting::A3.params().unwrap());
    assert!((m.cov() - sigma).amax() < 0.01);
}
