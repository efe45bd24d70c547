// SPDX-License-Identifier: Apache-2.0

use deepfilt::models::{
    generate_ensemble, generate_ensemble_with, read_ensemble_dir, simulate_ctmc, simulate_path,
    write_ensemble_dir, ModelSpec, SYMMETRIC_GENERATOR,
};
use deepfilt::rng::derive_seed;
use deepfilt::Exec;
use statrs::distribution::{ContinuousCDF, Normal};

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn observation_residuals_are_gaussian() {
    let spec = ModelSpec::linear(0.5);
    let mut resid: Vec<f64> = generate_ensemble(&spec, 10, 31)
        .unwrap()
        .iter()
        .flat_map(|p| {
            p.observations
                .iter()
                .zip(&p.states)
                .map(|(y, x)| y - x)
                .collect::<Vec<_>>()
        })
        .collect();
    resid.truncate(10_000);
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((0.24..=0.26).contains(&var), "residual variance {var}");

    let normal = Normal::new(0.0, 0.5).unwrap();
    let d = ks_statistic(&mut resid, |x| normal.cdf(x));
    // 1% critical value of the one-sample KS test
    let crit = 1.6276 / n.sqrt();
    assert!(d < crit, "KS statistic {d} >= {crit}");

    // residuals of consecutive steps are uncorrelated
    let p = simulate_path(&spec, 32).unwrap();
    let r: Vec<f64> = p
        .observations
        .iter()
        .zip(&p.states)
        .map(|(y, x)| y - x)
        .collect();
    let lag1 = r.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (r.len() - 1) as f64;
    assert!(
        (lag1 / 0.25).abs() < 0.1,
        "lag-1 correlation {}",
        lag1 / 0.25
    );
}

#[test]
fn noiseless_paths_follow_the_euler_orbit() {
    for spec in [ModelSpec::linear(0.0), ModelSpec::sin(0.0)] {
        let spec = ModelSpec { sigma: 0.0, ..spec };
        let p = simulate_path(&spec, 1).unwrap();
        let mut x = spec.x0;
        for n in 0..p.len() {
            assert_eq!(p.states[n], x, "{} n={n}", spec.kind);
            assert_eq!(p.observations[n], x);
            x = match spec.kind {
                deepfilt::models::ModelKind::LinearDrift => (1.0 + 0.1 * spec.step) * x,
                _ => x + spec.step * (5.0 * x).sin(),
            };
        }
    }
}

#[test]
fn ensembles_agree_across_execution_modes_and_prefixes() {
    for spec in [
        ModelSpec::linear(0.5),
        ModelSpec::sin(0.5),
        ModelSpec::switching(0.3),
    ] {
        let seq = generate_ensemble_with(Exec::Sequential, &spec, 12, 77).unwrap();
        let par = generate_ensemble_with(Exec::Parallel, &spec, 12, 77).unwrap();
        assert_eq!(seq, par);
        let prefix = generate_ensemble(&spec, 5, 77).unwrap();
        assert_eq!(&seq[..5], &prefix[..]);
    }
}

#[test]
fn ensemble_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ModelSpec::switching(0.3);
    let paths = generate_ensemble(&spec, 3, 8).unwrap();
    write_ensemble_dir(dir.path(), &spec, 8, &paths).unwrap();
    let (spec_back, seed, back) = read_ensemble_dir(dir.path()).unwrap();
    assert_eq!(spec_back, spec);
    assert_eq!(seed, 8);
    assert_eq!(back, paths);
}

#[test]
fn ctmc_spends_half_its_time_in_each_state() {
    let alpha = simulate_ctmc(&SYMMETRIC_GENERATOR, 500.0, 0.005, 5).unwrap();
    let frac = alpha.iter().filter(|&&a| a == 1).count() as f64 / alpha.len() as f64;
    assert!((frac - 0.5).abs() < 0.02, "fraction in state 1: {frac}");
    // jump rate |Q_ii| = 2 per unit time
    let jumps = alpha.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    assert!(
        (jumps / 500.0 - 2.0).abs() < 0.15,
        "jump rate {}",
        jumps / 500.0
    );
}

#[test]
fn ctmc_two_point_law_matches_the_generator() {
    // P(α(t) = α(0)) = (1 + e^{-4t}) / 2 for Q = [[-2, 2], [2, -2]]
    let n = 100_000;
    let stay = (0..n)
        .filter(|&i| {
            let a = simulate_ctmc(&SYMMETRIC_GENERATOR, 0.5, 0.005, derive_seed(9, i)).unwrap();
            a[0] == a[100]
        })
        .count() as f64
        / n as f64;
    let expected = (1.0 + (-2.0f64).exp()) / 2.0;
    assert!((stay - expected).abs() < 0.01, "{stay} vs {expected}");
}
