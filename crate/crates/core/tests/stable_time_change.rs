use reflang::estimators::{ks_two_sample, mean_and_stderr, quantile_standardize};
use reflang::exec::map_replicas;
use reflang::local_time::{occupation_local_time, sample_sigma};
use reflang::paths::dyadic_wiener;
use reflang::stable::{sample_increments, StableConfig};
use reflang::{Execution, RngStream};

#[test]
fn position_at_inverse_local_time_is_one_third_stable() {
    let h = 1e-3;
    let n = 10_000;
    let draws = map_replicas(Execution::Parallel, n, |r| {
        sample_sigma(1.0, h, h.sqrt(), &mut RngStream::new(70, r).rng(), 1e12).unwrap()
    });
    let sigma: Vec<f64> = draws.into_iter().flatten().collect();
    assert!(sigma.len() as u64 > n - 10, "{} censored", n as usize - sigma.len());
    let cms = sample_increments(&StableConfig::new(1.0, 1.0).unwrap(), &RngStream::new(71, 0), n as usize);
    // Shape comparison: both samples are centred on their medians and scaled
    // by their interquartile ranges.
    let ks = ks_two_sample(&quantile_standardize(&sigma), &quantile_standardize(&cms)).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

fn sigma_sample(level: f64, h: f64, seed: u64, n: u64) -> Vec<f64> {
    map_replicas(Execution::Parallel, n, |r| sample_sigma(level, h, h.sqrt(), &mut RngStream::new(seed, r).rng(), 1e12).unwrap())
        .into_iter()
        .flatten()
        .collect()
}

#[test]
fn sigma_is_symmetric() {
    let sigma = sigma_sample(0.5, 1e-5, 72, 4000);
    let neg: Vec<f64> = sigma.iter().map(|s| -s).collect();
    assert!(ks_two_sample(&sigma, &neg).unwrap().p_value > 0.01);
}

#[test]
fn sigma_scales_with_the_cube_of_the_level() {
    let one = sigma_sample(1.0, 1e-5, 74, 4000);
    let half: Vec<f64> = sigma_sample(0.5, 1e-5, 75, 4000).into_iter().map(|s| 8.0 * s).collect();
    let ks = ks_two_sample(&one, &half).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn occupation_estimate_matches_tanaka() {
    let h = 1e-4;
    let steps = 10_000;
    let (occ, tanaka): (Vec<f64>, Vec<f64>) = map_replicas(Execution::Parallel, 2000, |r| {
        let w = dyadic_wiener(steps, h, &RngStream::new(73, r)).unwrap();
        let l = *occupation_local_time(&w, h, h.sqrt()).unwrap().values.last().unwrap();
        let stoch: f64 = w.windows(2).map(|p| p[0].signum() * (p[1] - p[0])).sum();
        (l, w[steps].abs() - stoch)
    })
    .into_iter()
    .unzip();
    let expected = (2.0 / std::f64::consts::PI).sqrt();
    for sample in [&occ, &tanaka] {
        let (m, se) = mean_and_stderr(sample);
        assert!((m - expected).abs() < 4.0 * se, "{m} ± {se}");
    }
}
