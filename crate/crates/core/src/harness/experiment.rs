// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use crate::deepfilter::{train_on_model, TrainedFilter};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::config::{Baseline, ExperimentConfig};
use crate::kalman::{ekf_run, kf_run_scalar, FilterPoint};
use crate::metrics::{relative_error_with, Ensemble, ErrorTable};
use crate::models::{generate_ensemble_with, ModelSpec, Path};

/// Row label of the network estimate.
pub const DF_ROW: &str = "DF";

/// Outcome of one sweep cell.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub label: String,
    pub config: ExperimentConfig,
    pub filter: Arc<TrainedFilter>,
    /// Relative errors in percent.
    pub df_error: f64,
    pub baseline_errors: Vec<(Baseline, f64)>,
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub table: ErrorTable,
    pub cells: Vec<CellReport>,
}

/// Trained filter plus wall-clock training time.
#[derive(Debug, Clone)]
pub struct Trained {
    pub filter: Arc<TrainedFilter>,
    pub seconds: f64,
}

fn training_key(cfg: &ExperimentConfig) -> String {
    let mut kv = crate::kv::KvMap::new();
    cfg.nominal.to_kv("nominal", &mut kv);
    cfg.train_config().to_kv("train", &mut kv);
    kv.insert("seeds.train", cfg.seeds.train);
    kv.insert("seeds.init", cfg.seeds.init);
    kv.render()
}

/// Trains the network for `cfg`: `n_seed` nominal paths from `seeds.train`,
/// weights from `seeds.init`.
pub fn train_filter(exec: Exec, cfg: &ExperimentConfig) -> Result<Trained> {
    let start = Instant::now();
    let filter = train_on_model(
        exec,
        &cfg.nominal,
        &cfg.train_config(),
        cfg.seeds.train,
        cfg.seeds.init,
    )?;
    Ok(Trained {
        filter: Arc::new(filter),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The `n_test_paths` actual-model test paths of `cfg`.
pub fn test_ensemble(exec: Exec, cfg: &ExperimentConfig) -> Result<Vec<Path>> {
    generate_ensemble_with(exec, &cfg.actual, cfg.n_test_paths, cfg.seeds.test)
}

/// Full filter output of `baseline` built from `nominal`, started at the
/// nominal initial state with zero variance.
pub fn baseline_points(
    baseline: Baseline,
    nominal: &ModelSpec,
    observations: &[f64],
) -> Result<Vec<FilterPoint>> {
    let prior = FilterPoint::prior(nominal.x0, 0.0);
    match baseline {
        Baseline::Kf => kf_run_scalar(nominal, observations, prior),
        Baseline::Ekf => ekf_run(nominal, observations, prior),
    }
}

/// Truth states `x_n`, `n = n₀..=N`, of every path.
pub fn truth_ensemble(paths: &[Path], n0: usize) -> Result<Ensemble> {
    Ensemble::from_rows(paths.iter().map(|p| p.states[n0..].to_vec()).collect(), n0)
}

/// Network estimates `x̃_n`, `n = n₀..=N`.
pub fn df_ensemble(exec: Exec, filter: &TrainedFilter, paths: &[Path]) -> Result<Ensemble> {
    let rows = exec.try_map(paths.len(), |m| filter.infer_values(&paths[m].observations))?;
    Ensemble::from_rows(rows, filter.n0)
}

/// Filtered means `x̄_n`, `n = n₀..=N`.
pub fn baseline_ensemble(
    exec: Exec,
    baseline: Baseline,
    nominal: &ModelSpec,
    paths: &[Path],
    n0: usize,
) -> Result<Ensemble> {
    let rows = exec.try_map(paths.len(), |m| {
        let pts = baseline_points(baseline, nominal, &paths[m].observations)?;
        Ok::<_, Error>(pts[n0..].iter().map(|p| p.x_bar).collect())
    })?;
    Ensemble::from_rows(rows, n0)
}

fn score_cell(
    exec: Exec,
    label: String,
    cfg: ExperimentConfig,
    trained: &Trained,
) -> Result<CellReport> {
    let n0 = cfg.train.n0;
    let paths = test_ensemble(exec, &cfg)?;
    let truth = truth_ensemble(&paths, n0)?;
    let df = df_ensemble(exec, &trained.filter, &paths)?;
    let df_error = 100.0 * relative_error_with(exec, &df, &truth)?;
    let mut baseline_errors = Vec::with_capacity(cfg.baselines.len());
    for &b in &cfg.baselines {
        let est = baseline_ensemble(exec, b, &cfg.nominal, &paths, n0)?;
        baseline_errors.push((b, 100.0 * relative_error_with(exec, &est, &truth)?));
    }
    Ok(CellReport {
        label,
        config: cfg,
        filter: Arc::clone(&trained.filter),
        df_error,
        baseline_errors,
        train_seconds: trained.seconds,
    })
}

/// Hardware string for timing metadata.
pub fn hardware_string() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {threads} threads; {}-{}",
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}

/// Runs every sweep cell of `cfg`: trains on the nominal model, filters a
/// fresh actual-model ensemble and scores DF and the baselines against the
/// truth over `n = n₀..=N`.
///
/// Cells run through `exec`; training inside a cell is sequential. Cells
/// with identical nominal models and training settings share one network.
pub fn run_experiment(exec: Exec, cfg: &ExperimentConfig) -> Result<Experiment> {
    let start = Instant::now();
    cfg.validate()?;
    let cells = cfg.cells()?;

    let mut keys: BTreeMap<String, usize> = BTreeMap::new();
    let mut unique: Vec<&ExperimentConfig> = Vec::new();
    let cell_slot: Vec<usize> = cells
        .iter()
        .map(|(_, c)| {
            *keys.entry(training_key(c)).or_insert_with(|| {
                unique.push(c);
                unique.len() - 1
            })
        })
        .collect();
    let trained = exec.try_map(unique.len(), |i| train_filter(exec, unique[i]))?;

    let reports = exec.try_map(cells.len(), |i| {
        let (label, c) = &cells[i];
        score_cell(exec, label.clone(), c.clone(), &trained[cell_slot[i]])
    })?;

    let labels: Vec<String> = reports.iter().map(|r| r.label.clone()).collect();
    let corner = cfg.sweep.as_ref().map_or("config", |s| s.param.header());
    let mut table = ErrorTable::new(&cfg.title, corner, labels);
    table.push_row(DF_ROW, reports.iter().map(|r| r.df_error).collect())?;
    for (j, b) in cfg.baselines.iter().enumerate() {
        table.push_row(
            b.label(),
            reports.iter().map(|r| r.baseline_errors[j].1).collect(),
        )?;
    }
    table.meta.digest = cfg.digest();
    table.meta.hardware = hardware_string();
    table.meta.cell_seconds = reports
        .iter()
        .map(|r| (r.label.clone(), r.train_seconds))
        .collect();
    table.meta.extra = cfg.to_kv();
    table.meta.wall_seconds = start.elapsed().as_secs_f64();
    Ok(Experiment {
        table,
        cells: reports,
    })
}
