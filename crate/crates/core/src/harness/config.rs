// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::deepfilter::TrainConfig;
use crate::error::{Error, Result};
use crate::kv::{parse_list, KvMap};
use crate::models::{ModelKind, ModelSpec};

/// Reference filter run alongside the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Kf,
    Ekf,
}

impl Baseline {
    pub fn label(self) -> &'static str {
        match self {
            Baseline::Kf => "KF",
            Baseline::Ekf => "EKF",
        }
    }

    /// The baseline built from a nominal model of this kind, if any.
    pub fn for_nominal(kind: ModelKind) -> Option<Baseline> {
        match kind {
            ModelKind::LinearDrift => Some(Baseline::Kf),
            ModelKind::SinDrift => Some(Baseline::Ekf),
            ModelKind::SwitchingSin => None,
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::Kf => "kf",
            Baseline::Ekf => "ekf",
        })
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kf" => Ok(Baseline::Kf),
            "ekf" => Ok(Baseline::Ekf),
            other => Err(Error::validation(format!("unknown baseline `{other}`"))),
        }
    }
}

/// A config field that a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    NominalSigma0,
    ActualSigma0,
    NominalSigma,
    ActualSigma,
    /// Observation noise of both models at once.
    BothSigma0,
    HiddenUnits,
    HiddenLayers,
    Window,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::NominalSigma0 => "nominal.sigma0",
            SweepParam::ActualSigma0 => "actual.sigma0",
            SweepParam::NominalSigma => "nominal.sigma",
            SweepParam::ActualSigma => "actual.sigma",
            SweepParam::BothSigma0 => "sigma0",
            SweepParam::HiddenUnits => "train.hidden_units",
            SweepParam::HiddenLayers => "train.hidden_layers",
            SweepParam::Window => "train.n0",
        }
    }

    /// Column header used in tables.
    pub fn header(self) -> &'static str {
        match self {
            SweepParam::NominalSigma0 => "sigma0_NM",
            SweepParam::ActualSigma0 => "sigma0_AM",
            SweepParam::NominalSigma => "sigma_NM",
            SweepParam::ActualSigma => "sigma_AM",
            SweepParam::BothSigma0 => "sigma0",
            SweepParam::HiddenUnits => "units",
            SweepParam::HiddenLayers => "layers",
            SweepParam::Window => "n0",
        }
    }

    fn is_integer(self) -> bool {
        matches!(
            self,
            SweepParam::HiddenUnits | SweepParam::HiddenLayers | SweepParam::Window
        )
    }

    /// Applies `value` to a copy of `cfg`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = cfg.clone();
        let as_count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::validation(format!(
                    "sweep value {value} for `{}` must be a positive integer",
                    self.key()
                )))
            }
        };
        match self {
            SweepParam::NominalSigma0 => c.nominal.sigma0 = value,
            SweepParam::ActualSigma0 => c.actual.sigma0 = value,
            SweepParam::NominalSigma => c.nominal.sigma = value,
            SweepParam::ActualSigma => c.actual.sigma = value,
            SweepParam::BothSigma0 => {
                c.nominal.sigma0 = value;
                c.actual.sigma0 = value;
            }
            SweepParam::HiddenUnits => c.train.hidden_units = as_count()?,
            SweepParam::HiddenLayers => c.train.hidden_layers = as_count()?,
            SweepParam::Window => c.train.n0 = as_count()?,
        }
        Ok(c)
    }

    pub fn format_value(self, value: f64) -> String {
        if self.is_integer() {
            format!("{}", value as usize)
        } else {
            format!("{value}")
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::NominalSigma0,
            SweepParam::ActualSigma0,
            SweepParam::NominalSigma,
            SweepParam::ActualSigma,
            SweepParam::BothSigma0,
            SweepParam::HiddenUnits,
            SweepParam::HiddenLayers,
            SweepParam::Window,
        ]
        .into_iter()
        .find(|p| p.key() == s)
        .ok_or_else(|| Error::validation(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seeds {
    /// Base seed of the nominal training ensemble.
    pub train: u64,
    /// Base seed of the actual test ensemble.
    pub test: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self::from_base(1)
    }
}

impl Seeds {
    pub fn from_base(s: u64) -> Self {
        Self {
            train: s,
            test: s.wrapping_add(1),
            init: s.wrapping_add(2),
            shuffle: s.wrapping_add(3),
        }
    }
}

/// Experiment scale preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// 500 training paths, 200 test paths, every 5th window, and enough
    /// epochs to match the full profile's SGD sample count.
    Desk,
    /// 5000 training paths, 5000 test paths, every window.
    Full,
}

pub const DESK_TRAIN_PATHS: usize = 500;
pub const DESK_TEST_PATHS: usize = 200;
pub const DESK_STRIDE: usize = 5;
pub const DESK_EPOCHS: usize = FULL_TRAIN_PATHS / DESK_TRAIN_PATHS * DESK_STRIDE;
pub const FULL_TRAIN_PATHS: usize = 5000;
pub const FULL_TEST_PATHS: usize = 5000;

impl Profile {
    pub fn apply(self, cfg: &mut ExperimentConfig) {
        match self {
            Profile::Desk => {
                cfg.train.n_seed = DESK_TRAIN_PATHS;
                cfg.n_test_paths = DESK_TEST_PATHS;
                cfg.train.sample_stride = DESK_STRIDE;
                cfg.train.epochs = DESK_EPOCHS;
            }
            Profile::Full => {
                cfg.train.n_seed = FULL_TRAIN_PATHS;
                cfg.n_test_paths = FULL_TEST_PATHS;
                cfg.train.sample_stride = 1;
                cfg.train.epochs = 1;
            }
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(Error::validation(format!(
                "unknown profile `{other}` (desk|full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub title: String,
    pub nominal: ModelSpec,
    pub actual: ModelSpec,
    pub train: TrainConfig,
    pub baselines: Vec<Baseline>,
    pub sweep: Option<Sweep>,
    pub seeds: Seeds,
    pub n_test_paths: usize,
    pub output_dir: PathBuf,
}

const MODEL_KEYS: [&str; 7] = [
    "kind",
    "horizon",
    "step",
    "sigma",
    "sigma0",
    "x0",
    "generator",
];
const TRAIN_KEYS: [&str; 9] = [
    "n0",
    "n_seed",
    "gamma",
    "epochs",
    "stride",
    "hidden_layers",
    "hidden_units",
    "batch_size",
    "order",
];
const OTHER_KEYS: [&str; 10] = [
    "experiment.title",
    "baselines",
    "sweep.param",
    "sweep.values",
    "seeds.train",
    "seeds.test",
    "seeds.init",
    "seeds.shuffle",
    "test.n_paths",
    "output.dir",
];

fn is_known_key(key: &str) -> bool {
    if OTHER_KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some(("nominal" | "actual", field)) => MODEL_KEYS.contains(&field),
        Some(("train", field)) => TRAIN_KEYS.contains(&field),
        _ => false,
    }
}

impl ExperimentConfig {
    /// Linear nominal and actual models at the defaults, KF baseline,
    /// no sweep, desk scale.
    pub fn linear_default() -> Self {
        let mut c = Self {
            title: "experiment".into(),
            nominal: ModelSpec::linear(0.5),
            actual: ModelSpec::linear(0.5),
            train: TrainConfig::default(),
            baselines: vec![Baseline::Kf],
            sweep: None,
            seeds: Seeds::default(),
            n_test_paths: DESK_TEST_PATHS,
            output_dir: PathBuf::from("out"),
        };
        Profile::Desk.apply(&mut c);
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.nominal
            .validate()
            .map_err(|e| prefix_err("nominal", e))?;
        self.actual
            .validate()
            .map_err(|e| prefix_err("actual", e))?;
        self.train.validate()?;
        if self.n_test_paths == 0 {
            return Err(Error::validation("test.n_paths must be >= 1"));
        }
        if self.nominal.n_steps() != self.actual.n_steps() {
            return Err(Error::validation(
                "nominal and actual models must have the same number of steps",
            ));
        }
        if self.nominal.n_steps() < self.train.n0 {
            return Err(Error::validation(format!(
                "window n0 = {} exceeds the {} steps per path",
                self.train.n0,
                self.nominal.n_steps()
            )));
        }
        for b in &self.baselines {
            if self.actual.kind == ModelKind::SwitchingSin
                || self.nominal.kind == ModelKind::SwitchingSin
            {
                return Err(Error::validation(format!(
                    "baseline {} is not available for switching models",
                    b.label()
                )));
            }
            if Baseline::for_nominal(self.nominal.kind) != Some(*b) {
                return Err(Error::validation(format!(
                    "baseline {} does not match the nominal model `{}`",
                    b.label(),
                    self.nominal.kind
                )));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::validation("sweep.values is empty"));
            }
            for &v in &s.values {
                s.param.apply(self, v)?.validate_cell()?;
            }
        }
        Ok(())
    }

    fn validate_cell(&self) -> Result<()> {
        self.nominal
            .validate()
            .map_err(|e| prefix_err("nominal", e))?;
        self.actual
            .validate()
            .map_err(|e| prefix_err("actual", e))?;
        self.train.validate()
    }

    /// Sweep cells as `(label, config)`; a config without a sweep is one cell.
    pub fn cells(&self) -> Result<Vec<(String, ExperimentConfig)>> {
        match &self.sweep {
            None => Ok(vec![("base".into(), self.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((s.param.format_value(v), s.param.apply(self, v)?)))
                .collect(),
        }
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("experiment.title", &self.title);
        self.nominal.to_kv("nominal", &mut kv);
        self.actual.to_kv("actual", &mut kv);
        let mut train = self.train.clone();
        train.shuffle_seed = self.seeds.shuffle;
        let mut tkv = KvMap::new();
        train.to_kv("train", &mut tkv);
        for k in tkv.keys().filter(|k| *k != "train.shuffle_seed") {
            kv.insert(k, tkv.get(k).unwrap_or_default());
        }
        let baselines: Vec<String> = self.baselines.iter().map(ToString::to_string).collect();
        kv.insert(
            "baselines",
            if baselines.is_empty() {
                "none".to_string()
            } else {
                baselines.join(",")
            },
        );
        if let Some(s) = &self.sweep {
            kv.insert("sweep.param", s.param.key());
            let vals: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
            kv.insert("sweep.values", vals.join(","));
        }
        kv.insert("seeds.train", self.seeds.train);
        kv.insert("seeds.test", self.seeds.test);
        kv.insert("seeds.init", self.seeds.init);
        kv.insert("seeds.shuffle", self.seeds.shuffle);
        kv.insert("test.n_paths", self.n_test_paths);
        kv.insert("output.dir", self.output_dir.display());
        kv
    }

    /// Overrides fields with any keys present in `kv`. Unknown keys are rejected.
    pub fn apply_kv(&mut self, kv: &KvMap) -> Result<()> {
        if let Some(k) = kv.keys().find(|k| !is_known_key(k)) {
            return Err(Error::validation(format!("unknown config key `{k}`")));
        }
        if let Some(t) = kv.get("experiment.title") {
            self.title = t.to_string();
        }
        // a changed kind resets that side to the defaults for the new kind
        for (prefix, spec) in [("nominal", &mut self.nominal), ("actual", &mut self.actual)] {
            if let Some(kind) = kv.parse_opt::<ModelKind>(&format!("{prefix}.kind"))? {
                if kind != spec.kind {
                    let sigma0 = spec.sigma0;
                    *spec = ModelSpec::default_for(kind, sigma0);
                }
            }
            spec.apply_kv(prefix, kv)?;
        }
        self.train.apply_kv("train", kv)?;
        if let Some(b) = kv.get("baselines") {
            self.baselines = if b.trim().eq_ignore_ascii_case("none") || b.trim().is_empty() {
                Vec::new()
            } else {
                parse_list(b)?
            };
        }
        match (kv.get("sweep.param"), kv.get("sweep.values")) {
            (Some(p), Some(v)) => {
                self.sweep = Some(Sweep {
                    param: p.parse()?,
                    values: parse_list(v)?,
                })
            }
            (None, None) => {}
            (Some(p), None) if p.eq_ignore_ascii_case("none") => self.sweep = None,
            _ => {
                return Err(Error::validation(
                    "sweep.param and sweep.values must be given together",
                ))
            }
        }
        if let Some(v) = kv.parse_opt("seeds.train")? {
            self.seeds.train = v;
        }
        if let Some(v) = kv.parse_opt("seeds.test")? {
            self.seeds.test = v;
        }
        if let Some(v) = kv.parse_opt("seeds.init")? {
            self.seeds.init = v;
        }
        if let Some(v) = kv.parse_opt("seeds.shuffle")? {
            self.seeds.shuffle = v;
        }
        if let Some(v) = kv.parse_opt("test.n_paths")? {
            self.n_test_paths = v;
        }
        if let Some(v) = kv.get("output.dir") {
            self.output_dir = PathBuf::from(v);
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let mut c = Self::linear_default();
        c.apply_kv(kv)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv(&KvMap::parse(&text, path)?)
    }

    /// Training config with the configured shuffle seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            shuffle_seed: self.seeds.shuffle,
            ..self.train.clone()
        }
    }

    /// SHA-256 of the canonical `key = value` rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_kv().render().as_bytes()))
    }
}

fn prefix_err(side: &str, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("{side} model: {m}")),
        other => other,
    }
}
