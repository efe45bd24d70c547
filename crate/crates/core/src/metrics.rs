// SPDX-License-Identifier: Apache-2.0

//! Normalized relative error between two estimate ensembles, and labeled
//! error tables.
//!
//! For ensembles `a`, `b` over paths `m` and steps `n`:
//!
//! ```text
//! ‖a − b‖ = mean |a − b| / mean (|a| + |b|)
//! ```
//!
//! Both means run over the same `(m, n)` grid, so the grid size cancels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kv::KvMap;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Rectangular grid of values: `paths × steps`, row-major by path.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    paths: usize,
    steps: usize,
    /// Time index of the first column (`n₀`).
    first_index: usize,
    values: Vec<f64>,
}

impl Ensemble {
    pub fn new(paths: usize, steps: usize, first_index: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != paths * steps {
            return Err(Error::validation(format!(
                "ensemble has {} values, expected {paths} x {steps}",
                values.len()
            )));
        }
        Ok(Self {
            paths,
            steps,
            first_index,
            values,
        })
    }

    /// Builds from per-path rows, which must all have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>, first_index: usize) -> Result<Self> {
        let steps = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != steps) {
            return Err(Error::validation("ensemble rows have different lengths"));
        }
        let paths = rows.len();
        Self::new(
            paths,
            steps,
            first_index,
            rows.into_iter().flatten().collect(),
        )
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.steps..(m + 1) * self.steps]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    fn congruent(&self, other: &Ensemble) -> bool {
        self.paths == other.paths
            && self.steps == other.steps
            && self.first_index == other.first_index
    }
}

/// Relative error as a fraction (multiply by 100 for percent).
pub fn relative_error(a: &Ensemble, b: &Ensemble) -> Result<f64> {
    relative_error_with(Exec::default(), a, b)
}

/// As [`relative_error`]; per-path partial sums may run in parallel and are
/// combined in path order, so the result does not depend on `exec`.
pub fn relative_error_with(exec: Exec, a: &Ensemble, b: &Ensemble) -> Result<f64> {
    if !a.congruent(b) {
        return Err(Error::validation(format!(
            "ensembles are not congruent: {}x{}@{} vs {}x{}@{}",
            a.paths, a.steps, a.first_index, b.paths, b.steps, b.first_index
        )));
    }
    if a.values.is_empty() {
        return Err(Error::validation("empty ensembles"));
    }
    let partials = exec.map(a.paths, |m| {
        let (ra, rb) = (a.row(m), b.row(m));
        let mut diff = CompensatedSum::default();
        let mut mag = CompensatedSum::default();
        for (x, y) in ra.iter().zip(rb) {
            diff.add((x - y).abs());
            mag.add(x.abs() + y.abs());
        }
        (diff, mag)
    });
    let mut diff = CompensatedSum::default();
    let mut mag = CompensatedSum::default();
    for (d, s) in &partials {
        diff.merge(d);
        mag.merge(s);
    }
    let (diff, mag) = (diff.value(), mag.value());
    if mag.is_nan() || mag <= 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(diff / mag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub method: String,
    /// Relative errors in percent, one per column label.
    pub values: Vec<f64>,
}

/// Per-run metadata written next to a table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableMeta {
    pub digest: String,
    pub wall_seconds: f64,
    /// `(cell label, training seconds)`.
    pub cell_seconds: Vec<(String, f64)>,
    pub hardware: String,
    pub extra: KvMap,
}

/// Labeled grid of relative errors: columns are sweep values, rows are methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub title: String,
    /// Header of the first column, usually the swept parameter.
    pub corner: String,
    pub labels: Vec<String>,
    pub rows: Vec<ErrorRow>,
    pub meta: TableMeta,
}

impl ErrorTable {
    pub fn new(title: impl Into<String>, corner: impl Into<String>, labels: Vec<String>) -> Self {
        Self {
            title: title.into(),
            corner: corner.into(),
            labels,
            rows: Vec::new(),
            meta: TableMeta::default(),
        }
    }

    pub fn push_row(&mut self, method: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.labels.len() {
            return Err(Error::validation(format!(
                "row has {} values but the table has {} labels",
                values.len(),
                self.labels.len()
            )));
        }
        self.rows.push(ErrorRow {
            method: method.into(),
            values,
        });
        Ok(())
    }

    pub fn row(&self, method: &str) -> Option<&[f64]> {
        self.rows
            .iter()
            .find(|r| r.method == method)
            .map(|r| r.values.as_slice())
    }

    /// CSV with two-decimal percentages. Contains no timing, so reruns with
    /// the same seeds produce identical bytes.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}", self.corner);
        for l in &self.labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{}", r.method);
            for v in &r.values {
                if v.is_nan() {
                    s.push(',');
                } else {
                    let _ = write!(s, ",{v:.2}");
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn meta_string(&self) -> String {
        let mut kv = self.meta.extra.clone();
        kv.insert("table.title", &self.title);
        kv.insert("config.digest", &self.meta.digest);
        kv.insert(
            "timing.wall_seconds",
            format!("{:.3}", self.meta.wall_seconds),
        );
        kv.insert("timing.hardware", &self.meta.hardware);
        for (label, secs) in &self.meta.cell_seconds {
            kv.insert(
                format!("timing.train_seconds.{label}"),
                format!("{secs:.3}"),
            );
        }
        kv.render()
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.meta`.
    pub fn write(&self, dir: impl AsRef<Path>, name: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("{name}.csv"));
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let meta = dir.join(format!("{name}.meta"));
        fs::write(&meta, self.meta_string()).map_err(|e| Error::io(&meta, e))?;
        Ok(())
    }
}

/// Scores each `(label, estimate, truth)` cell into one row named `method`.
pub fn sweep_errors(method: &str, grid: &[(String, &Ensemble, &Ensemble)]) -> Result<ErrorTable> {
    if grid.is_empty() {
        return Err(Error::validation("empty sweep grid"));
    }
    if method.trim().is_empty() {
        return Err(Error::validation("empty method name"));
    }
    let mut labels = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    for (label, a, b) in grid {
        if label.trim().is_empty() {
            return Err(Error::validation("empty sweep label"));
        }
        labels.push(label.clone());
        values.push(100.0 * relative_error(a, b)?);
    }
    let mut t = ErrorTable::new(method, "label", labels);
    t.push_row(method, values)?;
    Ok(t)
}
