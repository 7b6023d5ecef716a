use ghz_lhv::detector::{fourfold_breakdown, ArrivalWeights, DetectorParams};
use ghz_lhv::montecarlo::{compare_analytic, run, run_with_workers, RunConfig};
use ghz_lhv::quantum::SettingTriple;

fn scaled(n: u64, seed: u64) -> RunConfig {
    let params = DetectorParams::new(0.5, 1e-2, 0.99, 0.01, 1.0).unwrap();
    RunConfig::new(params, SettingTriple::XYY, n, seed)
}

#[test]
fn scaled_regime_matches_exact_model() {
    let cfg = scaled(10_000_000, 2024);
    let stats = run(&cfg).unwrap();
    let cmp = compare_analytic(&stats, &cfg.params, &cfg.arrival_weights);
    let e_hat = stats.e_hat.unwrap();
    let se = stats.std_err.unwrap();
    assert!((e_hat - cmp.e_analytic).abs() <= 3.0 * se, "{e_hat} vs {}", cmp.e_analytic);

    let p4 = fourfold_breakdown(&cfg.params, &ArrivalWeights::default().normalized()).total();
    let binom_se = (p4 * (1.0 - p4) / stats.n_trials as f64).sqrt();
    assert!((stats.p4_hat - p4).abs() <= 3.0 * binom_se);
    assert!(!cmp.flagged);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut cfg = scaled(300_000, 7);
    cfg.chunk_size = 10_000;
    let one = run_with_workers(&cfg, 1).unwrap();
    let four = run_with_workers(&cfg, 4).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, run(&cfg).unwrap());
}

#[test]
fn different_seeds_differ() {
    let a = run(&scaled(200_000, 1)).unwrap();
    let b = run(&scaled(200_000, 2)).unwrap();
    assert_ne!(a.tally, b.tally);
}

#[test]
fn conditioning_uses_fourfolds_only() {
    let stats = run(&scaled(1_000_000, 3)).unwrap();
    assert!(stats.n_ghz_fourfold <= stats.n_fourfold && stats.n_fourfold <= stats.n_trials);
    assert!(stats.n_fourfold < stats.n_trials / 100);
    let e = stats.tally.product_sum as f64 / stats.n_fourfold as f64;
    assert_eq!(stats.e_hat, Some(e));
    let sigma = (1.0 - e * e).sqrt();
    assert!((stats.std_err.unwrap() - sigma / (stats.n_fourfold as f64).sqrt()).abs() < 1e-15);
}

#[test]
fn ghz_subset_is_pure() {
    let stats = run(&scaled(2_000_000, 4)).unwrap();
    assert!(stats.n_ghz_fourfold > 0);
    assert_eq!(stats.ghz_subset_mean(), Some(1.0));
}

#[test]
fn error_shrinks_with_sample_size() {
    let cfg = scaled(1, 0);
    let analytic = compare_analytic(&run(&scaled(1000, 0)).unwrap(), &cfg.params, &cfg.arrival_weights)
        .e_analytic;
    let median_err = |n: u64| {
        let mut errs: Vec<f64> = (0..3)
            .map(|k| (run(&scaled(n, 500 + k)).unwrap().e_hat.unwrap() - analytic).abs())
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[1]
    };
    let errs: Vec<f64> = [100_000, 1_000_000, 10_000_000].into_iter().map(median_err).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}
