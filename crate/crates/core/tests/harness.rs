// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::process::Command;
use std::sync::Arc;

use deepfilt::harness::suites::SuiteId;
use deepfilt::harness::{
    emit_figure_data, run_experiment, run_table_suite, Baseline, ExperimentConfig, Profile, Sweep,
    SweepParam,
};
use deepfilt::models::ModelSpec;
use deepfilt::{Error, Exec};

fn tiny(mut c: ExperimentConfig) -> ExperimentConfig {
    c.nominal.horizon = 1.0;
    c.actual.horizon = 1.0;
    c.train.n_seed = 6;
    c.train.sample_stride = 10;
    c.train.epochs = 2;
    c.n_test_paths = 5;
    c
}

fn tiny_linear_sweep() -> ExperimentConfig {
    let mut c = tiny(ExperimentConfig::linear_default());
    c.sweep = Some(Sweep {
        param: SweepParam::NominalSigma0,
        values: vec![0.5, 1.0, 2.0],
    });
    c
}

#[test]
fn results_do_not_depend_on_execution_mode() {
    let c = tiny_linear_sweep();
    let seq = run_experiment(Exec::Sequential, &c).unwrap();
    let again = run_experiment(Exec::Sequential, &c).unwrap();
    let par = run_experiment(Exec::Parallel, &c).unwrap();
    assert_eq!(seq.table.to_csv(), again.table.to_csv());
    assert_eq!(seq.table.to_csv(), par.table.to_csv());
    assert_eq!(seq.table.rows, par.table.rows);
    assert_eq!(seq.table.labels, vec!["0.5", "1", "2"]);
    assert_eq!(seq.table.rows[0].method, "DF");
    assert_eq!(seq.table.rows[1].method, "KF");
    assert_eq!(seq.table.meta.digest, c.digest());
}

#[test]
fn single_value_sweep_equals_plain_experiment() {
    let plain = tiny(ExperimentConfig::linear_default());
    let mut swept = plain.clone();
    swept.sweep = Some(Sweep {
        param: SweepParam::ActualSigma0,
        values: vec![plain.actual.sigma0],
    });
    let a = run_experiment(Exec::default(), &plain).unwrap();
    let b = run_experiment(Exec::default(), &swept).unwrap();
    assert_eq!(a.table.rows, b.table.rows);
}

#[test]
fn actual_noise_sweep_trains_once() {
    let mut c = tiny(ExperimentConfig::linear_default());
    c.sweep = Some(Sweep {
        param: SweepParam::ActualSigma0,
        values: vec![0.1, 0.5, 1.0],
    });
    let exp = run_experiment(Exec::default(), &c).unwrap();
    assert!(Arc::ptr_eq(&exp.cells[0].filter, &exp.cells[2].filter));
    let df = exp.table.row("DF").unwrap();
    let kf = exp.table.row("KF").unwrap();
    assert!(df.iter().chain(kf).all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn mismatched_baselines_are_rejected_up_front() {
    let mut c = tiny(ExperimentConfig::linear_default());
    c.baselines = vec![Baseline::Ekf];
    assert!(matches!(
        run_experiment(Exec::default(), &c),
        Err(Error::Validation(_))
    ));
    c.nominal = ModelSpec::switching(0.3);
    c.actual = ModelSpec::switching(0.3);
    c.baselines = vec![Baseline::Kf];
    assert!(matches!(
        run_experiment(Exec::default(), &c),
        Err(Error::Validation(_))
    ));
}

#[test]
fn figure_files_have_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(ExperimentConfig::linear_default());
    let files = emit_figure_data(Exec::default(), &c, None, 2, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    assert!(files[0].ends_with("fig_2_path1.csv"));
    let text = fs::read_to_string(&files[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x,y,x_hat,x_bar,x_tilde,err_df");
    assert_eq!(lines.len(), 1 + 201);
    let n0 = c.train.n0;
    // row for n = n0 - 1 has empty network columns, row n0 does not
    assert!(lines[n0].ends_with(",,"));
    let row: Vec<&str> = lines[n0 + 1].split(',').collect();
    let (x, xt, err): (f64, f64, f64) = (
        row[1].parse().unwrap(),
        row[5].parse().unwrap(),
        row[6].parse().unwrap(),
    );
    assert_eq!(err, x - xt);
    let filled = lines[1..].iter().filter(|l| !l.ends_with(",,")).count();
    assert_eq!(filled, 201 - n0);

    let again = tempfile::tempdir().unwrap();
    emit_figure_data(Exec::Sequential, &c, None, 2, again.path()).unwrap();
    assert_eq!(
        text,
        fs::read_to_string(again.path().join("fig_2_path1.csv")).unwrap()
    );

    let mut s = tiny(ExperimentConfig::linear_default());
    s.nominal = ModelSpec {
        horizon: 1.0,
        ..ModelSpec::switching(0.3)
    };
    s.actual = s.nominal.clone();
    s.baselines.clear();
    let files = emit_figure_data(Exec::default(), &s, None, 1, dir.path()).unwrap();
    assert!(files[0].ends_with("fig_3_path1.csv"));
    let header = fs::read_to_string(&files[0])
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "n,alpha,x,y,x_tilde,err_df");
}

#[test]
fn table_one_layout() {
    let run = run_table_suite(Exec::default(), SuiteId::T1, |c| {
        *c = tiny(c.clone());
        Ok(())
    })
    .unwrap();
    let t = &run.table;
    assert_eq!(t.labels, vec!["3", "5", "10", "20", "KF"]);
    let methods: Vec<&str> = t.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, vec!["0.1", "0.5", "1", "2"]);
    assert_eq!(t.meta.cell_seconds.len(), 16);
    assert!(t
        .meta_string()
        .contains("timing.train_seconds.sigma0=2/units=20"));
    // the KF column does not depend on the network
    let kf_half = t.rows[1].values[4];
    let single = run.experiments[1].table.row("KF").unwrap();
    assert!(single.iter().all(|&v| v == kf_half));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deepfilt"))
}

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        "experiment.title = tiny run\n\
         nominal.horizon = 1\nactual.horizon = 1\n\
         train.n_seed = 4\ntrain.stride = 20\ntrain.epochs = 1\ntest.n_paths = 3\n\
         sweep.param = actual.sigma0\nsweep.values = 0.5, 1\n",
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "1", "--figures", "1", "--seed", "7"])
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = fs::read_to_string(out.join("tiny_run.csv")).unwrap();
    assert!(csv.starts_with("sigma0_AM,0.5,1\nDF,"));
    let meta = fs::read_to_string(out.join("tiny_run.meta")).unwrap();
    assert!(meta.contains("seeds.train = 7\n") && meta.contains("seeds.shuffle = 10\n"));
    assert!(meta.contains("config.digest = "));
    assert!(out.join("fig_2_path1.csv").exists());

    fs::write(&cfg, "nominal.colour = red\n").unwrap();
    let bad = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let bad = bin().args(["run", "--table", "T2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    fs::write(
        &cfg,
        "nominal.x0 = 1e200\nnominal.sigma = 0\nnominal.horizon = 1\nactual.horizon = 1\n\
         train.n_seed = 2\ntrain.stride = 50\ntest.n_paths = 2\n",
    )
    .unwrap();
    let diverged = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        diverged.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&diverged.stderr)
    );

    let sim = dir.path().join("sim");
    let ok = bin()
        .args(["simulate", "--model", "switching", "--paths", "2", "--out"])
        .arg(&sim)
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(sim.join("path_00001.csv").exists());
}

/// AM-noise monotonicity: each row is nondecreasing in σ₀^AM, allowing one
/// inversion of at most 0.3 pp.
#[test]
fn errors_grow_with_actual_noise_at_desk_scale() {
    for id in [
        SuiteId::T4,
        SuiteId::T6,
        SuiteId::T8,
        SuiteId::T10,
        SuiteId::T12,
    ] {
        let run = run_table_suite(Exec::default(), id, |c| {
            Profile::Desk.apply(c);
            Ok(())
        })
        .unwrap();
        for row in &run.table.rows {
            let drops: Vec<f64> = row
                .values
                .windows(2)
                .map(|w| w[0] - w[1])
                .filter(|&d| d > 0.0)
                .collect();
            assert!(
                drops.len() <= 1 && drops.iter().all(|&d| d <= 0.3),
                "{id} {}: {:?}",
                row.method,
                row.values
            );
        }
    }
}
