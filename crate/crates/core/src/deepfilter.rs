// SPDX-License-Identifier: Apache-2.0

//! Supervised windows from nominal-model ensembles, SGD training, and the
//! trained network run as a filter on new observations.
//!
//! A window at time `κ` is `(y_κ, y_{κ-1}, …, y_{κ-n₀+1})` with target `x_κ`,
//! for `κ = n₀..=N`. All windows from all training paths are pooled into one
//! dataset and a single network is trained on it.

use std::fmt;
use std::fs;
use std::path::Path as FsPath;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kv::KvMap;
use crate::models::{generate_ensemble_with, ModelSpec, Path};
use crate::neural::{
    loss, Activations, BackwardScratch, Gradient, Mlp, MlpArch, DEFAULT_HIDDEN_LAYERS,
    DEFAULT_HIDDEN_UNITS,
};
use crate::rng::{derive_seed, RngStream, STREAM_SHUFFLE};

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_TRAIN_PATHS: usize = 5000;
pub const DEFAULT_GAMMA: f64 = 0.1;
/// Default mini-batch size. Single-sample steps at `γ = 0.1` are unstable
/// for the default network.
pub const DEFAULT_BATCH: usize = 32;
/// Length of the trailing window used for the per-epoch loss summary.
pub const TRAILING_STEPS: usize = 10_000;

/// Ordering of observations inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowOrder {
    /// `(y_κ, y_{κ-1}, …)`.
    #[default]
    MostRecentFirst,
    /// `(y_{κ-n₀+1}, …, y_κ)`.
    OldestFirst,
}

impl fmt::Display for WindowOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowOrder::MostRecentFirst => "recent-first",
            WindowOrder::OldestFirst => "oldest-first",
        })
    }
}

impl FromStr for WindowOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recent-first" => Ok(WindowOrder::MostRecentFirst),
            "oldest-first" => Ok(WindowOrder::OldestFirst),
            other => Err(Error::validation(format!("unknown window order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub input: Vec<f64>,
    pub target: f64,
    pub path_seed: u64,
    pub kappa: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Window size `n₀`.
    pub n0: usize,
    /// Number of training paths.
    pub n_seed: usize,
    /// Learning rate `γ`.
    pub gamma: f64,
    pub epochs: usize,
    pub shuffle_seed: u64,
    /// Keep windows with `κ ≡ n₀ (mod stride)`.
    pub sample_stride: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    /// Samples averaged per SGD step. 1 is plain single-sample SGD.
    pub batch_size: usize,
    pub order: WindowOrder,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n0: DEFAULT_WINDOW,
            n_seed: DEFAULT_TRAIN_PATHS,
            gamma: DEFAULT_GAMMA,
            epochs: 1,
            shuffle_seed: 0,
            sample_stride: 1,
            hidden_layers: DEFAULT_HIDDEN_LAYERS,
            hidden_units: DEFAULT_HIDDEN_UNITS,
            batch_size: DEFAULT_BATCH,
            order: WindowOrder::MostRecentFirst,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::validation("n0 must be >= 1"));
        }
        if self.n_seed == 0 {
            return Err(Error::validation("n_seed must be >= 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::validation(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if self.sample_stride == 0 {
            return Err(Error::validation("sample_stride must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be >= 1"));
        }
        self.arch().validate()
    }

    pub fn arch(&self) -> MlpArch {
        MlpArch {
            input_dim: self.n0,
            hidden_layers: self.hidden_layers,
            hidden_units: self.hidden_units,
            output_dim: 1,
        }
    }

    pub fn to_kv(&self, prefix: &str, out: &mut KvMap) {
        out.insert(format!("{prefix}.n0"), self.n0);
        out.insert(format!("{prefix}.n_seed"), self.n_seed);
        out.insert(format!("{prefix}.gamma"), self.gamma);
        out.insert(format!("{prefix}.epochs"), self.epochs);
        out.insert(format!("{prefix}.shuffle_seed"), self.shuffle_seed);
        out.insert(format!("{prefix}.stride"), self.sample_stride);
        out.insert(format!("{prefix}.hidden_layers"), self.hidden_layers);
        out.insert(format!("{prefix}.hidden_units"), self.hidden_units);
        out.insert(format!("{prefix}.batch_size"), self.batch_size);
        out.insert(format!("{prefix}.order"), self.order);
    }

    pub fn apply_kv(&mut self, prefix: &str, kv: &KvMap) -> Result<()> {
        macro_rules! field {
            ($key:literal, $f:ident) => {
                if let Some(v) = kv.parse_opt(&format!("{prefix}.{}", $key))? {
                    self.$f = v;
                }
            };
        }
        field!("n0", n0);
        field!("n_seed", n_seed);
        field!("gamma", gamma);
        field!("epochs", epochs);
        field!("shuffle_seed", shuffle_seed);
        field!("stride", sample_stride);
        field!("hidden_layers", hidden_layers);
        field!("hidden_units", hidden_units);
        field!("batch_size", batch_size);
        field!("order", order);
        Ok(())
    }
}

/// Windows of one path, `κ = n₀..=N`, most recent observation first.
pub fn extract_windows(path: &Path, n0: usize) -> Result<Vec<WindowSample>> {
    check_window_fits(path.observations.len(), n0)?;
    Ok((n0..path.len())
        .map(|k| WindowSample {
            input: (0..n0).map(|j| path.observations[k - j]).collect(),
            target: path.states[k],
            path_seed: path.seed,
            kappa: k,
        })
        .collect())
}

fn check_window_fits(len: usize, n0: usize) -> Result<()> {
    if n0 == 0 {
        return Err(Error::validation("window size must be >= 1"));
    }
    if len < n0 + 1 {
        return Err(Error::validation(format!(
            "sequence of length {len} is too short for window size {n0} (need >= {})",
            n0 + 1
        )));
    }
    Ok(())
}

/// Observations laid out so that every window is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
struct WindowSource {
    data: Vec<f64>,
    order: WindowOrder,
}

impl WindowSource {
    fn new(obs: &[f64], order: WindowOrder) -> Self {
        let data = match order {
            WindowOrder::MostRecentFirst => obs.iter().rev().copied().collect(),
            WindowOrder::OldestFirst => obs.to_vec(),
        };
        Self { data, order }
    }

    fn window(&self, kappa: usize, n0: usize) -> &[f64] {
        match self.order {
            WindowOrder::MostRecentFirst => {
                let start = self.data.len() - 1 - kappa;
                &self.data[start..start + n0]
            }
            WindowOrder::OldestFirst => &self.data[kappa + 1 - n0..=kappa],
        }
    }
}

/// Borrowed view of one training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRef<'a> {
    pub input: &'a [f64],
    pub target: f64,
    pub path_seed: u64,
    pub kappa: usize,
}

impl WindowRef<'_> {
    pub fn to_owned(&self) -> WindowSample {
        WindowSample {
            input: self.input.to_vec(),
            target: self.target,
            path_seed: self.path_seed,
            kappa: self.kappa,
        }
    }
}

/// Pooled, shuffled windows from a training ensemble. Windows are views into
/// per-path observation buffers rather than copies.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n0: usize,
    order: WindowOrder,
    sources: Vec<WindowSource>,
    targets: Vec<Vec<f64>>,
    seeds: Vec<u64>,
    index: Vec<(u32, u32)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn get(&self, i: usize) -> WindowRef<'_> {
        let (p, k) = self.index[i];
        let (p, k) = (p as usize, k as usize);
        WindowRef {
            input: self.sources[p].window(k, self.n0),
            target: self.targets[p][k],
            path_seed: self.seeds[p],
            kappa: k,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = WindowRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Mean of `½(ξ − x)²` over the dataset for `net`.
    pub fn mean_loss(&self, net: &Mlp) -> Result<f64> {
        let mut acts = Activations::for_arch(net.arch());
        let mut total = 0.0;
        for s in self.iter() {
            let out = net.predict_scalar(s.input, &mut acts)?;
            total += 0.5 * (out - s.target) * (out - s.target);
        }
        Ok(total / self.len() as f64)
    }
}

pub fn build_dataset(ensemble: &[Path], cfg: &TrainConfig) -> Result<Dataset> {
    build_dataset_with(Exec::default(), ensemble, cfg)
}

/// Pools windows from every path (thinned by `sample_stride`) and shuffles
/// them deterministically with `shuffle_seed`.
pub fn build_dataset_with(exec: Exec, ensemble: &[Path], cfg: &TrainConfig) -> Result<Dataset> {
    if ensemble.is_empty() {
        return Err(Error::validation("empty training ensemble"));
    }
    if cfg.n0 == 0 || cfg.sample_stride == 0 {
        return Err(Error::validation("n0 and sample_stride must be >= 1"));
    }
    for p in ensemble {
        check_window_fits(p.observations.len(), cfg.n0)?;
        if p.len() > u32::MAX as usize {
            return Err(Error::validation("path too long"));
        }
    }
    if ensemble.len() > u32::MAX as usize {
        return Err(Error::validation("too many paths"));
    }
    let sources = exec.map_slice(ensemble, |p| WindowSource::new(&p.observations, cfg.order));
    let mut index = Vec::new();
    for (pi, p) in ensemble.iter().enumerate() {
        index.extend(
            (cfg.n0..p.len())
                .step_by(cfg.sample_stride)
                .map(|k| (pi as u32, k as u32)),
        );
    }
    let mut rng = RngStream::new(cfg.shuffle_seed, STREAM_SHUFFLE).rng();
    index.shuffle(rng.inner());
    Ok(Dataset {
        n0: cfg.n0,
        order: cfg.order,
        sources,
        targets: ensemble.iter().map(|p| p.states.clone()).collect(),
        seeds: ensemble.iter().map(|p| p.seed).collect(),
        index,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub steps: usize,
    /// Mean per-sample loss over each epoch.
    pub epoch_mean_loss: Vec<f64>,
    /// Mean per-sample loss over the last [`TRAILING_STEPS`] samples of each epoch.
    pub epoch_trailing_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedFilter {
    pub net: Mlp,
    pub n0: usize,
    pub order: WindowOrder,
    pub nominal: Option<ModelSpec>,
    pub config: TrainConfig,
    pub init_seed: u64,
    pub train_seed: Option<u64>,
    /// Trailing-window mean loss at the end of training.
    pub final_loss: f64,
    pub report: TrainReport,
}

/// Trains one network on `dataset` with single-sample SGD (or averaged
/// mini-batches when `batch_size > 1`). Deterministic in the dataset order
/// and `init_seed`.
pub fn train(dataset: &Dataset, cfg: &TrainConfig, init_seed: u64) -> Result<TrainedFilter> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::validation("empty dataset"));
    }
    if dataset.n0 != cfg.n0 || dataset.order != cfg.order {
        return Err(Error::validation(
            "dataset window does not match the training config",
        ));
    }
    let arch = cfg.arch();
    let mut net = Mlp::init(arch, init_seed)?;
    let mut acts = Activations::for_arch(&arch);
    let mut grad = Gradient::zeros(&arch);
    let mut batch_grad = Gradient::zeros(&arch);
    let mut scratch = BackwardScratch::new(&arch);
    let mut report = TrainReport::default();
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0usize;
    let mut in_batch = 0usize;

    for epoch in 0..cfg.epochs {
        if epoch > 0 {
            let mut rng =
                RngStream::new(derive_seed(cfg.shuffle_seed, epoch as u64), STREAM_SHUFFLE).rng();
            order.shuffle(rng.inner());
        }
        let mut epoch_sum = 0.0;
        let mut trailing_sum = 0.0;
        let trailing_from = n.saturating_sub(TRAILING_STEPS);
        for (pos, &i) in order.iter().enumerate() {
            let s = dataset.get(i);
            net.forward_into(s.input, &mut acts)?;
            let err = acts.output()[0] - s.target;
            let l = 0.5 * err * err;
            if !l.is_finite() {
                return Err(Error::Diverged { step, loss: l });
            }
            epoch_sum += l;
            if pos >= trailing_from {
                trailing_sum += l;
            }
            if cfg.batch_size == 1 {
                net.backward_into(&acts, &[err], &mut grad, &mut scratch)?;
                net.sgd_step(&grad, cfg.gamma)?;
            } else {
                net.backward_into(&acts, &[err], &mut grad, &mut scratch)?;
                accumulate(&mut batch_grad, &grad, in_batch == 0);
                in_batch += 1;
                if in_batch == cfg.batch_size || pos + 1 == n {
                    scale(&mut batch_grad, 1.0 / in_batch as f64);
                    net.sgd_step(&batch_grad, cfg.gamma)?;
                    in_batch = 0;
                }
            }
            step += 1;
        }
        report.epoch_mean_loss.push(epoch_sum / n as f64);
        report
            .epoch_trailing_loss
            .push(trailing_sum / (n - trailing_from) as f64);
    }
    if !net.is_finite() {
        return Err(Error::Diverged {
            step,
            loss: f64::NAN,
        });
    }
    report.steps = step;
    Ok(TrainedFilter {
        net,
        n0: cfg.n0,
        order: cfg.order,
        nominal: None,
        config: cfg.clone(),
        init_seed,
        train_seed: None,
        final_loss: report
            .epoch_trailing_loss
            .last()
            .copied()
            .unwrap_or(f64::NAN),
        report,
    })
}

fn accumulate(acc: &mut Gradient, g: &Gradient, reset: bool) {
    for (a, b) in acc.layers.iter_mut().zip(&g.layers) {
        for (x, y) in a.weights.iter_mut().zip(&b.weights) {
            *x = if reset { *y } else { *x + y };
        }
        for (x, y) in a.biases.iter_mut().zip(&b.biases) {
            *x = if reset { *y } else { *x + y };
        }
    }
}

fn scale(g: &mut Gradient, c: f64) {
    for l in &mut g.layers {
        l.weights
            .iter_mut()
            .chain(l.biases.iter_mut())
            .for_each(|v| *v *= c);
    }
}

/// Simulates `cfg.n_seed` nominal paths from `train_seed`, builds the
/// dataset and trains.
pub fn train_on_model(
    exec: Exec,
    nominal: &ModelSpec,
    cfg: &TrainConfig,
    train_seed: u64,
    init_seed: u64,
) -> Result<TrainedFilter> {
    cfg.validate()?;
    let ensemble = generate_ensemble_with(exec, nominal, cfg.n_seed, train_seed)?;
    let dataset = build_dataset_with(exec, &ensemble, cfg)?;
    drop(ensemble);
    let mut f = train(&dataset, cfg, init_seed)?;
    f.nominal = Some(nominal.clone());
    f.train_seed = Some(train_seed);
    Ok(f)
}

impl TrainedFilter {
    /// Network outputs `x̃_κ` for `κ = n₀..=N`.
    pub fn infer_values(&self, observations: &[f64]) -> Result<Vec<f64>> {
        check_window_fits(observations.len(), self.n0)?;
        let src = WindowSource::new(observations, self.order);
        let mut acts = Activations::for_arch(self.net.arch());
        (self.n0..observations.len())
            .map(|k| self.net.predict_scalar(src.window(k, self.n0), &mut acts))
            .collect()
    }

    fn provenance(&self) -> KvMap {
        let mut kv = KvMap::new();
        if let Some(n) = &self.nominal {
            n.to_kv("nominal", &mut kv);
        }
        self.config.to_kv("train", &mut kv);
        kv.insert("seeds.init", self.init_seed);
        if let Some(s) = self.train_seed {
            kv.insert("seeds.train", s);
        }
        kv.insert("train.final_loss", format!("{:.16e}", self.final_loss));
        kv.insert("train.steps", self.report.steps);
        kv
    }

    /// Provenance as `# key = value` comment lines, then the network in the
    /// flat format.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for line in self.provenance().render().lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(&self.net.to_flat_string());
        s
    }

    pub fn from_file_str(text: &str, origin: &FsPath) -> Result<Self> {
        let mut header = String::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(rest) => {
                    header.push_str(rest.trim());
                    header.push('\n');
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let kv = KvMap::parse(&header, origin)?;
        let net = Mlp::from_flat_str(&body)?;
        let mut config = TrainConfig::default();
        config.apply_kv("train", &kv)?;
        let nominal = if kv.get("nominal.kind").is_some() {
            Some(ModelSpec::from_kv("nominal", &kv)?)
        } else {
            None
        };
        if net.arch().input_dim != config.n0 {
            return Err(Error::validation(
                "saved network input size does not match train.n0",
            ));
        }
        Ok(Self {
            n0: config.n0,
            order: config.order,
            nominal,
            init_seed: kv.parse_opt("seeds.init")?.unwrap_or(0),
            train_seed: kv.parse_opt("seeds.train")?,
            final_loss: kv.parse_opt("train.final_loss")?.unwrap_or(f64::NAN),
            report: TrainReport {
                steps: kv.parse_opt("train.steps")?.unwrap_or(0),
                ..TrainReport::default()
            },
            config,
            net,
        })
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_str(&text, path)
    }

    /// Wraps an existing network; used for zero or hand-built networks.
    pub fn from_net(net: Mlp, order: WindowOrder) -> Self {
        let n0 = net.arch().input_dim;
        let config = TrainConfig {
            n0,
            hidden_layers: net.arch().hidden_layers,
            hidden_units: net.arch().hidden_units,
            order,
            ..TrainConfig::default()
        };
        Self {
            net,
            n0,
            order,
            nominal: None,
            config,
            init_seed: 0,
            train_seed: None,
            final_loss: f64::NAN,
            report: TrainReport::default(),
        }
    }
}

/// `(κ, x̃_κ)` for `κ = n₀..=N`.
pub fn infer_path(filter: &TrainedFilter, observations: &[f64]) -> Result<Vec<(usize, f64)>> {
    Ok(filter
        .infer_values(observations)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i + filter.n0, v))
        .collect())
}

/// Per-sample loss of a single window; exposed for diagnostics.
pub fn sample_loss(net: &Mlp, sample: &WindowSample) -> Result<f64> {
    let (out, _) = net.forward(&sample.input)?;
    loss(&out, &[sample.target])
}
