//! Statistical behaviour of the Monte Carlo runs.

use qst_core::noise_mc::{
    base_matrix, field_perturbation, first_order_infidelity, first_order_phase, run_mc, run_mc_with,
    run_trials, Infidelity, NoiseConfig,
};
use qst_core::rng::Stream;

#[test]
fn standard_error_shrinks_like_root_trials() {
    let small = run_mc(&NoiseConfig::new(30, 0.05, 0.05, 400, 11)).unwrap();
    let large = run_mc(&NoiseConfig::new(30, 0.05, 0.05, 1600, 11)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
    assert!((small.mean_infidelity - large.mean_infidelity).abs() < 4.0 * small.std_error);
}

#[test]
fn infidelity_grows_with_sigma() {
    let means: Vec<f64> = [0.02, 0.05, 0.1, 0.2]
        .iter()
        .map(|&s| run_mc_with(&NoiseConfig::new(30, s, 0.0, 300, 5), Infidelity::Overlap).unwrap().mean_infidelity)
        .collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn prefix_of_a_longer_run_is_the_shorter_run() {
    let short = run_trials(&NoiseConfig::new(25, 0.1, 0.1, 40, 9)).unwrap();
    let long = run_trials(&NoiseConfig::new(25, 0.1, 0.1, 90, 9)).unwrap();
    assert_eq!(&long[..40], &short[..]);
}

// Replays the draw order: one Gaussian per pair, then the two end fields.
fn end_fields(cfg: &NoiseConfig, k: u64) -> (f64, f64) {
    let mut rng = Stream::derived(cfg.seed, k);
    for _ in 0..cfg.n * (cfg.n - 1) / 2 {
        rng.gaussian();
    }
    (cfg.sigma_f * rng.gaussian(), cfg.sigma_f * rng.gaussian())
}

#[test]
fn weak_field_noise_follows_first_order_phase() {
    let cfg = NoiseConfig::new(40, 0.0, 2e-3, 200, 21);
    let base = base_matrix(&cfg).unwrap();
    let t = cfg.transfer_time();
    let overlaps = run_trials(&cfg).unwrap();
    let (mut mc, mut predicted, mut literal) = (0.0, 0.0, 0.0);
    for (k, f) in overlaps.iter().enumerate() {
        let (e1, en) = end_fields(&cfg, k as u64);
        let theta = first_order_phase(&base, &field_perturbation(cfg.n, e1, en), t).unwrap();
        mc += (1.0 - f).norm();
        predicted += theta.abs();
        literal += first_order_infidelity(e1, en, cfg.n, cfg.j0);
    }
    assert!((mc / predicted - 1.0).abs() < 0.2, "mc {mc} predicted {predicted}");
    // The bare |d eps| t estimate is far from the transfer-averaged phase.
    assert!(literal > 1.2 * predicted, "literal {literal} predicted {predicted}");
}
