// SPDX-License-Identifier: Apache-2.0

//! Experiment runner: configs, NM/AM sweeps, the table suites and figure
//! data.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod suites;

pub use config::{Baseline, ExperimentConfig, Profile, Seeds, Sweep, SweepParam};
pub use experiment::{run_experiment, CellReport, Experiment};
pub use figures::emit_figure_data;
pub use suites::{run_table_suite, suite_config, SuiteId, SuiteRun};
