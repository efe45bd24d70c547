// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use crate::deepfilter::TrainedFilter;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{baseline_points, test_ensemble, train_filter};
use crate::models::ModelKind;

/// Figure number used in file names: 3 for switching models, 2 otherwise.
pub fn figure_number(cfg: &ExperimentConfig) -> usize {
    if cfg.actual.kind == ModelKind::SwitchingSin {
        3
    } else {
        2
    }
}

/// Writes `fig_<k>_path<i>.csv` for the first `n_paths` test paths of `cfg`
/// (sweep ignored). Columns: `n, [alpha], x, y, [x_hat, x_bar], x_tilde,
/// err_df`, where `err_df = x − x̃`. Network columns are empty for `n < n₀`.
///
/// Uses `filter` when given, otherwise trains one.
pub fn emit_figure_data(
    exec: Exec,
    cfg: &ExperimentConfig,
    filter: Option<&TrainedFilter>,
    n_paths: usize,
    dir: impl AsRef<FsPath>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut cfg = cfg.clone();
    cfg.sweep = None;
    cfg.validate()?;
    if n_paths > cfg.n_test_paths {
        return Err(Error::validation(format!(
            "asked for {n_paths} figure paths but the test ensemble has {}",
            cfg.n_test_paths
        )));
    }
    let trained;
    let filter = match filter {
        Some(f) => f,
        None => {
            trained = train_filter(exec, &cfg)?;
            &*trained.filter
        }
    };
    let n0 = filter.n0;
    let k = figure_number(&cfg);
    let baseline = cfg.baselines.first().copied();
    let paths = test_ensemble(exec, &cfg)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut written = Vec::with_capacity(n_paths);
    for (i, p) in paths.iter().take(n_paths).enumerate() {
        let df = filter.infer_values(&p.observations)?;
        let kf = match baseline {
            Some(b) => Some(baseline_points(b, &cfg.nominal, &p.observations)?),
            None => None,
        };
        let file = dir.join(format!("fig_{k}_path{}.csv", i + 1));
        let mut w = csv::Writer::from_path(&file)?;
        let mut header = vec!["n"];
        if p.regimes.is_some() {
            header.push("alpha");
        }
        header.extend(["x", "y"]);
        if kf.is_some() {
            header.extend(["x_hat", "x_bar"]);
        }
        header.extend(["x_tilde", "err_df"]);
        w.write_record(&header)?;
        for n in 0..p.len() {
            let mut rec = vec![n.to_string()];
            if let Some(r) = &p.regimes {
                rec.push(r[n].to_string());
            }
            rec.push(p.states[n].to_string());
            rec.push(p.observations[n].to_string());
            if let Some(pts) = &kf {
                rec.push(pts[n].x_hat.to_string());
                rec.push(pts[n].x_bar.to_string());
            }
            if n >= n0 {
                let xt = df[n - n0];
                rec.push(xt.to_string());
                rec.push((p.states[n] - xt).to_string());
            } else {
                rec.extend([String::new(), String::new()]);
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&file, e))?;
        written.push(file);
    }
    Ok(written)
}
