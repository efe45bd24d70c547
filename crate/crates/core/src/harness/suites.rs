// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::config::{Baseline, ExperimentConfig, Sweep, SweepParam};
use crate::harness::experiment::{hardware_string, run_experiment, Experiment};
use crate::metrics::ErrorTable;
use crate::models::{ModelKind, ModelSpec};

/// Observation-noise grid of the linear and sin tables.
pub const SIGMA0_GRID: [f64; 6] = [0.1, 0.5, 1.0, 1.5, 2.0, 2.5];
/// Observation-noise grid of the switching tables.
pub const SWITCHING_SIGMA0_GRID: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
/// Hidden-unit counts of the architecture table.
pub const UNIT_GRID: [usize; 4] = [3, 5, 10, 20];
/// Observation-noise rows of the architecture table.
pub const UNIT_SIGMA0_ROWS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuiteId {
    T1,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
}

impl SuiteId {
    pub const ALL: [SuiteId; 11] = [
        SuiteId::T1,
        SuiteId::T3,
        SuiteId::T4,
        SuiteId::T5,
        SuiteId::T6,
        SuiteId::T7,
        SuiteId::T8,
        SuiteId::T9,
        SuiteId::T10,
        SuiteId::T11,
        SuiteId::T12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::T1 => "T1",
            SuiteId::T3 => "T3",
            SuiteId::T4 => "T4",
            SuiteId::T5 => "T5",
            SuiteId::T6 => "T6",
            SuiteId::T7 => "T7",
            SuiteId::T8 => "T8",
            SuiteId::T9 => "T9",
            SuiteId::T10 => "T10",
            SuiteId::T11 => "T11",
            SuiteId::T12 => "T12",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown table `{s}` (T1, T3..T12)")))
    }
}

fn mismatch_config(
    title: &str,
    nominal: ModelKind,
    actual: ModelKind,
    fixed_sigma0: f64,
    param: SweepParam,
    values: &[f64],
) -> ExperimentConfig {
    let mut c = ExperimentConfig::linear_default();
    c.title = title.into();
    c.nominal = ModelSpec::default_for(nominal, fixed_sigma0);
    c.actual = ModelSpec::default_for(actual, fixed_sigma0);
    c.baselines = Baseline::for_nominal(nominal)
        .filter(|_| actual != ModelKind::SwitchingSin)
        .into_iter()
        .collect();
    c.sweep = Some(Sweep {
        param,
        values: values.to_vec(),
    });
    c
}

/// Configuration of a single-sweep table at desk scale. `T1` returns the
/// unit sweep at `σ₀ = 0.5`; [`run_table_suite`] runs it once per noise row.
pub fn suite_config(id: SuiteId) -> ExperimentConfig {
    use ModelKind::{LinearDrift as L, SinDrift as S, SwitchingSin as W};
    use SweepParam::{ActualSigma0 as Am, NominalSigma0 as Nm};
    let g = &SIGMA0_GRID;
    let sg = &SWITCHING_SIGMA0_GRID;
    match id {
        SuiteId::T1 => {
            let mut c =
                mismatch_config("T1 units x sigma0", L, L, 0.5, SweepParam::HiddenUnits, &[]);
            c.sweep = Some(Sweep {
                param: SweepParam::HiddenUnits,
                values: UNIT_GRID.iter().map(|&u| u as f64).collect(),
            });
            c
        }
        SuiteId::T3 => mismatch_config("T3 NM=L AM=L sigma0_NM", L, L, 0.5, Nm, g),
        SuiteId::T4 => mismatch_config("T4 NM=L AM=L sigma0_AM", L, L, 0.5, Am, g),
        SuiteId::T5 => mismatch_config("T5 NM=NL AM=NL sigma0_NM", S, S, 0.5, Nm, g),
        SuiteId::T6 => mismatch_config("T6 NM=NL AM=NL sigma0_AM", S, S, 0.5, Am, g),
        SuiteId::T7 => mismatch_config("T7 NM=L AM=NL sigma0_NM", L, S, 0.5, Nm, g),
        SuiteId::T8 => mismatch_config("T8 NM=L AM=NL sigma0_AM", L, S, 0.5, Am, g),
        SuiteId::T9 => mismatch_config("T9 NM=NL AM=L sigma0_NM", S, L, 0.5, Nm, g),
        SuiteId::T10 => mismatch_config("T10 NM=NL AM=L sigma0_AM", S, L, 0.5, Am, g),
        SuiteId::T11 => mismatch_config("T11 switching sigma0_NM", W, W, 0.3, Nm, sg),
        SuiteId::T12 => mismatch_config("T12 switching sigma0_AM", W, W, 0.3, Am, sg),
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub id: SuiteId,
    pub table: ErrorTable,
    /// One experiment per table, or one per noise row for `T1`.
    pub experiments: Vec<Experiment>,
}

/// Runs the table `id`. `adjust` applies profile and user overrides to the
/// suite configuration before it runs.
pub fn run_table_suite(
    exec: Exec,
    id: SuiteId,
    adjust: impl Fn(&mut ExperimentConfig) -> Result<()>,
) -> Result<SuiteRun> {
    let mut cfg = suite_config(id);
    adjust(&mut cfg)?;
    if id != SuiteId::T1 {
        let exp = run_experiment(exec, &cfg)?;
        return Ok(SuiteRun {
            id,
            table: exp.table.clone(),
            experiments: vec![exp],
        });
    }

    let start = Instant::now();
    let rows: Vec<ExperimentConfig> = UNIT_SIGMA0_ROWS
        .iter()
        .map(|&s0| {
            let mut c = cfg.clone();
            c.nominal.sigma0 = s0;
            c.actual.sigma0 = s0;
            c
        })
        .collect();
    for c in &rows {
        c.validate()?;
    }
    let experiments = exec.try_map(rows.len(), |i| run_experiment(exec, &rows[i]))?;

    let mut labels: Vec<String> = cfg.cells()?.into_iter().map(|(l, _)| l).collect();
    let baseline = cfg.baselines.first().copied();
    if let Some(b) = baseline {
        labels.push(b.label().to_string());
    }
    let mut table = ErrorTable::new(&cfg.title, "sigma0/units", labels);
    let mut hasher = Sha256::new();
    for (s0, exp) in UNIT_SIGMA0_ROWS.iter().zip(&experiments) {
        let mut values: Vec<f64> = exp.cells.iter().map(|c| c.df_error).collect();
        if baseline.is_some() {
            values.push(exp.cells[0].baseline_errors[0].1);
        }
        table.push_row(s0.to_string(), values)?;
        hasher.update(exp.table.meta.digest.as_bytes());
        for c in &exp.cells {
            table
                .meta
                .cell_seconds
                .push((format!("sigma0={s0}/units={}", c.label), c.train_seconds));
        }
    }
    table.meta.digest = hex::encode(hasher.finalize());
    table.meta.hardware = hardware_string();
    table.meta.extra = cfg.to_kv();
    table
        .meta
        .extra
        .insert("rows.sigma0", join(&UNIT_SIGMA0_ROWS));
    table.meta.wall_seconds = start.elapsed().as_secs_f64();
    Ok(SuiteRun {
        id,
        table,
        experiments,
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
