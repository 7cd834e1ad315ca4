use reflang::experiments::criteria::{evaluate, TITLES};
use reflang::experiments::{
    run_entrance, run_excursions, run_exit_law, run_scaling, EntranceParams, ExcursionParams, ExitLawParams,
    ScalingParams,
};
use reflang::Execution;

#[test]
fn thread_count_does_not_change_results() {
    let p = ExcursionParams { steps: 300_000, replicas: 4, rho_eps: Some(0.2), ..ExcursionParams::default() };
    let a = run_excursions(&p, Execution::Sequential).unwrap();
    let b = run_excursions(&p, Execution::Parallel).unwrap();
    assert_eq!(a.excursions, b.excursions);
    assert_eq!(a.rho_ratios, b.rho_ratios);
    assert_eq!(a.reports, b.reports);

    let p = ExitLawParams { replicas: 500, ..ExitLawParams::default() };
    assert_eq!(
        run_exit_law(&p, Execution::Sequential).unwrap().outcomes,
        run_exit_law(&p, Execution::Parallel).unwrap().outcomes
    );

    let p = ScalingParams {
        replicas: 100,
        steps: 100,
        dt: 1e-3,
        stopped_replicas: 50,
        stopped_ks_samples: 20,
        stopped_dt: 1e-2,
        ..ScalingParams::default()
    };
    let (a, b) = (run_scaling(&p, Execution::Sequential).unwrap(), run_scaling(&p, Execution::Parallel).unwrap());
    assert_eq!((a.x_t, a.zeta_1), (b.x_t, b.zeta_1));
}

#[test]
fn entrance_probabilities_increase_with_the_start() {
    let p = EntranceParams { xs: vec![0.05, 0.3, 0.8], replicas: 2000, dt: 1e-4, ..EntranceParams::default() };
    let out = run_entrance(&p, Execution::Parallel).unwrap();
    let probs: Vec<f64> = out.points.iter().map(|q| q.probability).collect();
    assert!(probs.windows(2).all(|w| w[0] < w[1]), "{probs:?}");
    for (q, e) in out.points.iter().zip(&out.exact) {
        assert!((q.probability - e).abs() < 5.0 * q.stderr.max(1e-3), "{q:?} vs {e}");
    }
}

#[test]
fn check_ids_are_bounded() {
    assert_eq!(TITLES.len(), 15);
    assert!(evaluate(0, Execution::Sequential).is_err());
    assert!(evaluate(16, Execution::Sequential).is_err());
    let two = evaluate(2, Execution::Parallel).unwrap();
    assert!(two.passed, "{}", two.summary);
}
