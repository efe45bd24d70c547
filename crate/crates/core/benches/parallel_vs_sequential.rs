// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deepfilt::deepfilter::{train_on_model, TrainConfig};
use deepfilt::harness::experiment::{baseline_ensemble, df_ensemble, truth_ensemble};
use deepfilt::harness::Baseline;
use deepfilt::metrics::relative_error_with;
use deepfilt::models::{generate_ensemble_with, ModelSpec};
use deepfilt::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn ensemble_generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate_ensemble");
    g.sample_size(10);
    for spec in [ModelSpec::linear(0.5), ModelSpec::switching(0.3)] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, spec.kind), &spec, |b, s| {
                b.iter(|| generate_ensemble_with(exec, s, 200, 1).unwrap())
            });
        }
    }
    g.finish();
}

fn filtering(c: &mut Criterion) {
    let spec = ModelSpec::linear(0.5);
    let cfg = TrainConfig {
        n_seed: 20,
        sample_stride: 5,
        ..TrainConfig::default()
    };
    let filter = train_on_model(Exec::Parallel, &spec, &cfg, 1, 3).unwrap();
    let paths = generate_ensemble_with(Exec::Parallel, &spec, 200, 2).unwrap();
    let truth = truth_ensemble(&paths, cfg.n0).unwrap();
    let df = df_ensemble(Exec::Parallel, &filter, &paths).unwrap();

    let mut g = c.benchmark_group("filter_ensemble");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("network", name), |b| {
            b.iter(|| df_ensemble(exec, &filter, &paths).unwrap())
        });
        g.bench_function(BenchmarkId::new("kalman", name), |b| {
            b.iter(|| baseline_ensemble(exec, Baseline::Kf, &spec, &paths, cfg.n0).unwrap())
        });
        g.bench_function(BenchmarkId::new("relative_error", name), |b| {
            b.iter(|| relative_error_with(exec, &df, &truth).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, ensemble_generation, filtering);
criterion_main!(benches);
