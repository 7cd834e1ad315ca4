use proptest::prelude::*;
use reflang::paths::{bounce_path, dyadic_wiener, simulate_kolmogorov, simulate_stopped_langevin, SimOptions};
use reflang::RngStream;

#[test]
fn bridge_refinement_keeps_coarse_points() {
    let stream = RngStream::new(5, 3);
    let coarse = simulate_kolmogorov(2000, 1e-3, 0.0, 0.0, &stream, &SimOptions::default()).unwrap();
    let fine = simulate_kolmogorov(8000, 2.5e-4, 0.0, 0.0, &stream, &SimOptions::default()).unwrap();
    for k in 0..coarse.len() {
        assert!((coarse.w[k] - fine.w[4 * k]).abs() < 1e-12, "w differs at {k}");
    }
    let err = (0..coarse.len()).map(|k| (coarse.y[k] - fine.y[4 * k]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn same_stream_same_path() {
    let s = RngStream::new(42, 7);
    for opts in [SimOptions::default(), SimOptions::exact_joint()] {
        let a = simulate_kolmogorov(5000, 1e-3, 0.0, 0.3, &s, &opts).unwrap();
        let b = simulate_kolmogorov(5000, 1e-3, 0.0, 0.3, &s, &opts).unwrap();
        assert_eq!(a, b);
        let c = simulate_kolmogorov(5000, 1e-3, 0.0, 0.3, &s.with_replica(8), &opts).unwrap();
        assert_ne!(a.w, c.w);
    }
}

#[test]
fn wiener_increments_have_unit_rate() {
    let h = 1e-3;
    let w = dyadic_wiener(200_000, h, &RngStream::new(9, 0)).unwrap();
    let n = (w.len() - 1) as f64;
    let var = w.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / n;
    // Standard error of the variance estimate is h * sqrt(2 / n).
    assert!((var / h - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "{var}");
}

#[test]
fn stopped_runs_end_at_zero_or_cap() {
    for r in 0..20 {
        let run = simulate_stopped_langevin(0.5, 0.0, 1e-3, &RngStream::new(3, r), &SimOptions { horizon_cap: 50.0, ..SimOptions::default() })
            .unwrap();
        let y = &run.path.y;
        match run.lifetime.observed() {
            Some(z) => {
                assert!(z > 0.0 && z <= 50.0 + 1e-9);
                assert!(y[..y.len() - 1].iter().all(|&v| v > 0.0));
            }
            None => assert!(y.iter().all(|&v| v > 0.0)),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_paths_are_lines(v0 in -5.0f64..5.0, x0 in -2.0f64..2.0, n in 1usize..200, dt in 1e-3f64..0.5) {
        let p = simulate_kolmogorov(n, dt, x0, v0, &RngStream::new(1, 0), &SimOptions::noiseless()).unwrap();
        for k in 0..p.len() {
            prop_assert!((p.y[k] - (x0 + v0 * k as f64 * dt)).abs() <= 1e-9 * (1.0 + p.y[k].abs()));
            prop_assert_eq!(p.w[k], v0);
        }
    }

    #[test]
    fn bounce_is_idempotent_and_nonnegative(seed in 0u64..1000, v0 in -1.0f64..1.0) {
        let p = simulate_kolmogorov(500, 1e-2, 0.0, v0, &RngStream::new(seed, 0), &SimOptions::default()).unwrap();
        let b = bounce_path(&p);
        prop_assert!(b.y.iter().all(|&y| y >= 0.0));
        prop_assert_eq!(bounce_path(&b), b.clone());
        for k in 0..p.len() {
            prop_assert_eq!(b.y[k], p.y[k].abs());
        }
    }
}
