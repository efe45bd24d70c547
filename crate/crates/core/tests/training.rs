// SPDX-License-Identifier: Apache-2.0

use deepfilt::deepfilter::{
    build_dataset, train, train_on_model, TrainConfig, TrainedFilter, WindowOrder,
};
use deepfilt::harness::{run_experiment, ExperimentConfig};
use deepfilt::models::{ModelSpec, Path};
use deepfilt::neural::Activations;
use deepfilt::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Paths whose state is an exact linear function of the last `w.len()`
/// observations, most recent first.
fn linear_target_paths(w: &[f64], n_paths: usize, len: usize, seed: u64) -> Vec<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_paths)
        .map(|i| {
            let ys: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xs: Vec<f64> = (0..len)
                .map(|n| {
                    if n + 1 < w.len() {
                        0.0
                    } else {
                        w.iter().enumerate().map(|(j, wj)| wj * ys[n - j]).sum()
                    }
                })
                .collect();
            Path {
                states: xs,
                observations: ys,
                regimes: None,
                seed: i as u64,
            }
        })
        .collect()
}

#[test]
fn learns_a_noiseless_linear_map_in_one_epoch() {
    let w = [0.5, -0.3, 0.2];
    let cfg = TrainConfig {
        n0: 3,
        n_seed: 11,
        hidden_layers: 1,
        hidden_units: 5,
        batch_size: 1,
        shuffle_seed: 1,
        ..TrainConfig::default()
    };
    let ds = build_dataset(&linear_target_paths(&w, 11, 1001, 1), &cfg).unwrap();
    assert!(ds.len() >= 10_000);
    let f = train(&ds, &cfg, 2).unwrap();
    assert_eq!(f.report.steps, ds.len());

    let test = build_dataset(&linear_target_paths(&w, 2, 1001, 3), &cfg).unwrap();
    let mut acts = Activations::for_arch(f.net.arch());
    let mse = test
        .iter()
        .map(|s| (f.net.predict_scalar(s.input, &mut acts).unwrap() - s.target).powi(2))
        .sum::<f64>()
        / test.len() as f64;
    assert!(mse < 1e-3, "mse {mse}");
}

fn desk_linear() -> ExperimentConfig {
    ExperimentConfig::linear_default()
}

#[test]
fn training_is_bit_exact_across_runs_and_modes() {
    let spec = ModelSpec::linear(0.5);
    let cfg = TrainConfig {
        n_seed: 20,
        sample_stride: 3,
        epochs: 2,
        shuffle_seed: 4,
        ..TrainConfig::default()
    };
    let a = train_on_model(Exec::Sequential, &spec, &cfg, 1, 3).unwrap();
    let b = train_on_model(Exec::Sequential, &spec, &cfg, 1, 3).unwrap();
    let c = train_on_model(Exec::Parallel, &spec, &cfg, 1, 3).unwrap();
    assert_eq!(a.net.params_flat(), b.net.params_flat());
    assert_eq!(a.net.params_flat(), c.net.params_flat());
    assert_eq!(a.report, c.report);
}

#[test]
fn trailing_loss_falls_over_training() {
    let mut cfg = desk_linear().train_config();
    cfg.epochs = 8;
    let f = train_on_model(Exec::default(), &ModelSpec::linear(0.5), &cfg, 1, 3).unwrap();
    let l = &f.report.epoch_trailing_loss;
    assert_eq!(l.len(), 8);
    let last = l[l.len() - 1];
    assert!(last < 0.5 * l[0], "trailing losses {l:?}");
    assert!(l[1..].iter().all(|&v| v < l[0]), "trailing losses {l:?}");
}

#[test]
fn shuffle_seed_barely_moves_the_desk_error() {
    let base = desk_linear();
    let mut other = base.clone();
    other.seeds.shuffle = 40;
    let a = run_experiment(Exec::default(), &base).unwrap().cells[0].df_error;
    let b = run_experiment(Exec::default(), &other).unwrap().cells[0].df_error;
    assert!((a - b).abs() < 0.5, "DF {a:.3}% vs {b:.3}%");
}

#[test]
fn window_order_is_a_convention() {
    let base = desk_linear();
    let mut reversed = base.clone();
    reversed.train.order = WindowOrder::OldestFirst;
    let a = run_experiment(Exec::default(), &base).unwrap().cells[0].df_error;
    let b = run_experiment(Exec::default(), &reversed).unwrap().cells[0].df_error;
    assert!((a - b).abs() < 1.0, "DF {a:.3}% vs {b:.3}%");
}

#[test]
fn saved_filter_reproduces_inference() {
    let spec = ModelSpec::sin(0.5);
    let cfg = TrainConfig {
        n_seed: 5,
        sample_stride: 7,
        ..TrainConfig::default()
    };
    let f = train_on_model(Exec::default(), &spec, &cfg, 8, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("filter.txt");
    f.save(&file).unwrap();
    let back = TrainedFilter::load(&file).unwrap();
    let obs = deepfilt::models::simulate_path(&spec, 10)
        .unwrap()
        .observations;
    assert_eq!(
        f.infer_values(&obs).unwrap(),
        back.infer_values(&obs).unwrap()
    );
    assert_eq!(back.nominal.as_ref(), Some(&spec));
    assert_eq!(back.config, f.config);
}
