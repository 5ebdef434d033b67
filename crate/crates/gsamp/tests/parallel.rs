use gsamp::parallel;
use gsamp_core::experiment::{monte_carlo_with_setup, prepare, reference_estimators, synthetic_problem, RunConfig, DEFAULT_CHEBYSHEV_ORDER};
use gsamp_core::{ErrorMode, SasParams, Seed, SynthSpec};

fn problem() -> (gsamp_core::Dataset, RunConfig) {
    let (data, _, _) = synthetic_problem(24, 20, 4, Seed(3), &SynthSpec::with_bandwidth(10)).unwrap();
    let rc = RunConfig {
        k: 4,
        observed: 16,
        bandwidth: None,
        noise: SasParams::new(1.3, 0.1, 0.0).unwrap(),
        trials: 6,
        estimators: reference_estimators(ErrorMode::Sign, DEFAULT_CHEBYSHEV_ORDER),
        seed: Seed(17),
        cutoff_ratio: 0.4,
        local_ratio: None,
        mask: None,
    };
    (data, rc)
}

#[test]
fn thread_count_does_not_change_results() {
    let (data, rc) = problem();
    let setup = prepare(&rc, &data).unwrap();
    let sequential = monte_carlo_with_setup(&rc, &data, &setup);
    for threads in [Some(1), Some(3), None] {
        let par = parallel::monte_carlo(&rc, &data, &setup, threads).unwrap();
        assert_eq!(par, sequential, "threads {threads:?}");
        for (a, b) in par.estimators.iter().zip(&sequential.estimators) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.mse_mean), bits(&b.mse_mean));
        }
    }
}

#[test]
fn single_trial_report_equals_the_trial() {
    let (data, mut rc) = problem();
    rc.trials = 1;
    let setup = prepare(&rc, &data).unwrap();
    let r = parallel::monte_carlo(&rc, &data, &setup, Some(2)).unwrap();
    for (e, est) in r.estimators.iter().enumerate() {
        let t = gsamp_core::experiment::capped_trial(&data, &setup, &rc, e, 0);
        assert_eq!(est.mse_mean, t.mse);
    }
}
