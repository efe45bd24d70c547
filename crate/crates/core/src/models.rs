// SPDX-License-Identifier: Apache-2.0

//! Scalar state-space models and seeded Monte Carlo path generation.
//!
//! Three dynamics families are supported, all observed as `y_n = x_n + σ₀ v_n`:
//!
//! * [`ModelKind::LinearDrift`]: `x_{n+1} = (1 + 0.1η) x_n + √η σ u_n`
//! * [`ModelKind::SinDrift`]: `x_{n+1} = x_n + η sin(5 x_n) + √η σ u_n`
//! * [`ModelKind::SwitchingSin`]: `x_n = sin(n η α_n + σ u_n)` where `α(t)` is a
//!   two-state continuous-time Markov chain on `{1, 2}`.
//!
//! Each path draws `u_n`, `v_n` and regime jumps from separate [`RngStream`]s
//! keyed by the path seed, so a path is a pure function of `(spec, seed)`.

use std::fmt;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kv::KvMap;
use crate::rng::{
    derive_seed, RngStream, StreamRng, STREAM_OBSERVATION, STREAM_REGIME, STREAM_SYSTEM,
};

pub const DEFAULT_HORIZON: f64 = 5.0;
pub const DEFAULT_STEP: f64 = 0.005;
pub const DEFAULT_SIGMA: f64 = 0.7;
pub const DEFAULT_SIGMA0: f64 = 0.5;
pub const DEFAULT_X0: f64 = 1.0;
pub const SWITCHING_SIGMA: f64 = 0.1;
pub const SWITCHING_SIGMA0: f64 = 0.3;
pub const SYMMETRIC_GENERATOR: Generator = [[-2.0, 2.0], [2.0, -2.0]];

/// Linear drift coefficient: `x_{n+1} = (1 + LINEAR_RATE η) x_n + ...`.
pub const LINEAR_RATE: f64 = 0.1;
/// Frequency in the nonlinear drift `η sin(SIN_FREQ x)`.
pub const SIN_FREQ: f64 = 5.0;

/// 2×2 CTMC rate matrix, row-major. Row `i` holds the rates out of regime `i + 1`.
pub type Generator = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LinearDrift,
    SinDrift,
    SwitchingSin,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LinearDrift => "linear",
            ModelKind::SinDrift => "sin",
            ModelKind::SwitchingSin => "switching",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lineardrift" | "l" => Ok(ModelKind::LinearDrift),
            "sin" | "sindrift" | "nonlinear" | "nl" => Ok(ModelKind::SinDrift),
            "switching" | "switchingsin" => Ok(ModelKind::SwitchingSin),
            other => Err(Error::validation(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Step size `η`.
    pub step: f64,
    /// System noise scale `σ`.
    pub sigma: f64,
    /// Observation noise scale `σ₀`.
    pub sigma0: f64,
    /// Initial state. Ignored by [`ModelKind::SwitchingSin`].
    pub x0: f64,
    /// Regime generator. Only used by [`ModelKind::SwitchingSin`].
    pub generator: Generator,
}

impl ModelSpec {
    pub fn linear(sigma0: f64) -> Self {
        Self {
            kind: ModelKind::LinearDrift,
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            sigma: DEFAULT_SIGMA,
            sigma0,
            x0: DEFAULT_X0,
            generator: SYMMETRIC_GENERATOR,
        }
    }

    pub fn sin(sigma0: f64) -> Self {
        Self {
            kind: ModelKind::SinDrift,
            ..Self::linear(sigma0)
        }
    }

    pub fn switching(sigma0: f64) -> Self {
        Self {
            kind: ModelKind::SwitchingSin,
            sigma: SWITCHING_SIGMA,
            ..Self::linear(sigma0)
        }
    }

    /// Default model of the given kind with the given observation noise.
    pub fn default_for(kind: ModelKind, sigma0: f64) -> Self {
        match kind {
            ModelKind::LinearDrift => Self::linear(sigma0),
            ModelKind::SinDrift => Self::sin(sigma0),
            ModelKind::SwitchingSin => Self::switching(sigma0),
        }
    }

    /// Number of steps `N = round(T / η)`; a path has `N + 1` points.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::validation(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::validation(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if self.n_steps() == 0 {
            return Err(Error::validation("horizon / step rounds to zero steps"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::validation(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.sigma0.is_finite() && self.sigma0 >= 0.0) {
            return Err(Error::validation(format!(
                "sigma0 must be >= 0, got {}",
                self.sigma0
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::validation("x0 must be finite"));
        }
        if self.kind == ModelKind::SwitchingSin {
            validate_generator(&self.generator)?;
        }
        Ok(())
    }

    /// One noiseless step of the drift recursion. Identity for the switching model.
    pub fn drift(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::LinearDrift => (1.0 + LINEAR_RATE * self.step) * x,
            ModelKind::SinDrift => x + self.step * (SIN_FREQ * x).sin(),
            ModelKind::SwitchingSin => x,
        }
    }

    /// Derivative of [`ModelSpec::drift`].
    pub fn drift_jacobian(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::LinearDrift => 1.0 + LINEAR_RATE * self.step,
            ModelKind::SinDrift => 1.0 + SIN_FREQ * self.step * (SIN_FREQ * x).cos(),
            ModelKind::SwitchingSin => 1.0,
        }
    }

    pub fn to_kv(&self, prefix: &str, out: &mut KvMap) {
        out.insert(format!("{prefix}.kind"), self.kind);
        out.insert(format!("{prefix}.horizon"), self.horizon);
        out.insert(format!("{prefix}.step"), self.step);
        out.insert(format!("{prefix}.sigma"), self.sigma);
        out.insert(format!("{prefix}.sigma0"), self.sigma0);
        out.insert(format!("{prefix}.x0"), self.x0);
        let g = &self.generator;
        out.insert(
            format!("{prefix}.generator"),
            format!("{},{},{},{}", g[0][0], g[0][1], g[1][0], g[1][1]),
        );
    }

    /// Reads `<prefix>.*` keys. `kind` is required; the rest default to the
    /// default values for that kind.
    pub fn from_kv(prefix: &str, kv: &KvMap) -> Result<Self> {
        let kind: ModelKind = kv.require(&format!("{prefix}.kind"))?;
        let mut spec = Self::default_for(kind, DEFAULT_SIGMA0);
        if kind == ModelKind::SwitchingSin {
            spec.sigma0 = SWITCHING_SIGMA0;
        }
        spec.apply_kv(prefix, kv)?;
        Ok(spec)
    }

    /// Overrides fields from any `<prefix>.*` keys present in `kv`.
    pub fn apply_kv(&mut self, prefix: &str, kv: &KvMap) -> Result<()> {
        if let Some(k) = kv.parse_opt(&format!("{prefix}.kind"))? {
            self.kind = k;
        }
        if let Some(v) = kv.parse_opt(&format!("{prefix}.horizon"))? {
            self.horizon = v;
        }
        if let Some(v) = kv.parse_opt(&format!("{prefix}.step"))? {
            self.step = v;
        }
        if let Some(v) = kv.parse_opt(&format!("{prefix}.sigma"))? {
            self.sigma = v;
        }
        if let Some(v) = kv.parse_opt(&format!("{prefix}.sigma0"))? {
            self.sigma0 = v;
        }
        if let Some(v) = kv.parse_opt(&format!("{prefix}.x0"))? {
            self.x0 = v;
        }
        if let Some(v) = kv.get(&format!("{prefix}.generator")) {
            let vals: Vec<f64> = crate::kv::parse_list(v)?;
            if vals.len() != 4 {
                return Err(Error::validation(
                    "generator needs 4 comma-separated entries",
                ));
            }
            self.generator = [[vals[0], vals[1]], [vals[2], vals[3]]];
        }
        Ok(())
    }
}

pub fn validate_generator(q: &Generator) -> Result<()> {
    for (i, row) in q.iter().enumerate() {
        let off = row[1 - i];
        if !(off.is_finite() && off >= 0.0) {
            return Err(Error::validation(format!(
                "generator off-diagonal entry in row {i} must be >= 0, got {off}"
            )));
        }
        let sum = row[0] + row[1];
        if sum.abs() > 1e-12 * (1.0 + off) {
            return Err(Error::validation(format!(
                "generator row {i} must sum to 0, sums to {sum}"
            )));
        }
    }
    Ok(())
}

/// One simulated trajectory over `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<f64>,
    pub observations: Vec<f64>,
    /// Regime `α_n ∈ {1, 2}`, present for switching models only.
    pub regimes: Option<Vec<u8>>,
    pub seed: u64,
}

impl Path {
    /// Number of points, `N + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Final index `N`.
    pub fn last_index(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn write_csv(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        match &self.regimes {
            Some(_) => w.write_record(["n", "alpha", "x", "y"])?,
            None => w.write_record(["n", "x", "y"])?,
        }
        for n in 0..self.len() {
            let x = self.states[n].to_string();
            let y = self.observations[n].to_string();
            match &self.regimes {
                Some(r) => w.write_record([n.to_string(), r[n].to_string(), x, y])?,
                None => w.write_record([n.to_string(), x, y])?,
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a path written by [`Path::write_csv`].
    pub fn read_csv(path: impl AsRef<FsPath>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let has_alpha = headers.iter().any(|h| h == "alpha");
        let mut out = Path {
            states: Vec::new(),
            observations: Vec::new(),
            regimes: has_alpha.then(Vec::new),
            seed,
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| -> Result<&str> {
                rec.get(j).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: "short record".into(),
                })
            };
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("bad number `{s}`"),
                })
            };
            let off = usize::from(has_alpha);
            if let Some(regimes) = out.regimes.as_mut() {
                regimes.push(field(1)?.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: "bad regime".into(),
                })?);
            }
            out.states.push(num(field(1 + off)?)?);
            out.observations.push(num(field(2 + off)?)?);
        }
        Ok(out)
    }
}

/// Simulates one path. Deterministic in `(spec, seed)`.
pub fn simulate_path(spec: &ModelSpec, seed: u64) -> Result<Path> {
    spec.validate()?;
    let n = spec.n_steps();
    let mut u = RngStream::new(seed, STREAM_SYSTEM).rng();
    let mut v = RngStream::new(seed, STREAM_OBSERVATION).rng();

    let mut states = Vec::with_capacity(n + 1);
    let mut regimes = None;
    match spec.kind {
        ModelKind::LinearDrift | ModelKind::SinDrift => {
            let scale = spec.step.sqrt() * spec.sigma;
            let mut x = spec.x0;
            states.push(x);
            for _ in 0..n {
                x = spec.drift(x) + scale * u.gaussian();
                states.push(x);
            }
        }
        ModelKind::SwitchingSin => {
            let mut rr = RngStream::new(seed, STREAM_REGIME).rng();
            let alpha = ctmc_grid(&spec.generator, spec.step, n, None, &mut rr);
            for (k, &a) in alpha.iter().enumerate() {
                let phase = k as f64 * spec.step * f64::from(a) + spec.sigma * u.gaussian();
                states.push(phase.sin());
            }
            regimes = Some(alpha);
        }
    }
    let observations = states
        .iter()
        .map(|&x| x + spec.sigma0 * v.gaussian())
        .collect();
    Ok(Path {
        states,
        observations,
        regimes,
        seed,
    })
}

/// Samples `α_n = α(nη)`, `n = 0..=N`, for a two-state CTMC on `{1, 2}` with
/// exact exponential holding times. `α_0` is uniform on `{1, 2}`.
pub fn simulate_ctmc(q: &Generator, horizon: f64, step: f64, seed: u64) -> Result<Vec<u8>> {
    simulate_ctmc_from(q, horizon, step, None, seed)
}

/// As [`simulate_ctmc`], optionally pinning the initial regime.
pub fn simulate_ctmc_from(
    q: &Generator,
    horizon: f64,
    step: f64,
    initial: Option<u8>,
    seed: u64,
) -> Result<Vec<u8>> {
    validate_generator(q)?;
    if !(horizon > 0.0 && step > 0.0) {
        return Err(Error::validation("horizon and step must be > 0"));
    }
    if let Some(a) = initial {
        if !(a == 1 || a == 2) {
            return Err(Error::validation(format!("regime must be 1 or 2, got {a}")));
        }
    }
    let n = (horizon / step).round() as usize;
    let mut rng = RngStream::new(seed, STREAM_REGIME).rng();
    Ok(ctmc_grid(q, step, n, initial, &mut rng))
}

fn ctmc_grid(
    q: &Generator,
    step: f64,
    n: usize,
    initial: Option<u8>,
    rng: &mut StreamRng,
) -> Vec<u8> {
    let initial = initial.unwrap_or_else(|| if rng.uniform() < 0.5 { 1 } else { 2 });
    let rate = |a: u8| -q[usize::from(a - 1)][usize::from(a - 1)];
    let mut state = initial;
    let mut next_jump = rng.exponential(rate(state));
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * step;
        while next_jump <= t {
            state = 3 - state;
            next_jump += rng.exponential(rate(state));
        }
        out.push(state);
    }
    out
}

/// Seed of path `index` in an ensemble rooted at `base_seed`.
pub fn path_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(base_seed, index as u64)
}

/// `n_paths` independent paths. Path `i` depends only on `(spec, base_seed, i)`.
pub fn generate_ensemble(spec: &ModelSpec, n_paths: usize, base_seed: u64) -> Result<Vec<Path>> {
    generate_ensemble_with(Exec::default(), spec, n_paths, base_seed)
}

pub fn generate_ensemble_with(
    exec: Exec,
    spec: &ModelSpec,
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<Path>> {
    if n_paths == 0 {
        return Err(Error::validation("n_paths must be >= 1"));
    }
    spec.validate()?;
    exec.try_map(n_paths, |i| simulate_path(spec, path_seed(base_seed, i)))
}

pub const MANIFEST_FILE: &str = "manifest.txt";

fn ensemble_file_name(i: usize) -> String {
    format!("path_{i:05}.csv")
}

/// Writes one CSV per path plus a manifest recording the spec and base seed.
pub fn write_ensemble_dir(
    dir: impl AsRef<FsPath>,
    spec: &ModelSpec,
    base_seed: u64,
    paths: &[Path],
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut kv = KvMap::new();
    spec.to_kv("model", &mut kv);
    kv.insert("ensemble.base_seed", base_seed);
    kv.insert("ensemble.n_paths", paths.len());
    let manifest = dir.join(MANIFEST_FILE);
    fs::write(&manifest, kv.render()).map_err(|e| Error::io(&manifest, e))?;
    let mut files = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let f = dir.join(ensemble_file_name(i));
        p.write_csv(&f)?;
        files.push(f);
    }
    Ok(files)
}

/// Reads an ensemble directory back: `(spec, base_seed, paths)`.
pub fn read_ensemble_dir(dir: impl AsRef<FsPath>) -> Result<(ModelSpec, u64, Vec<Path>)> {
    let dir = dir.as_ref();
    let manifest = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let kv = KvMap::parse(&text, &manifest)?;
    let spec = ModelSpec::from_kv("model", &kv)?;
    let base_seed: u64 = kv.require("ensemble.base_seed")?;
    let n: usize = kv.require("ensemble.n_paths")?;
    let paths = (0..n)
        .map(|i| Path::read_csv(dir.join(ensemble_file_name(i)), path_seed(base_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok((spec, base_seed, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            sigma: 0.0,
            sigma0: 0.0,
            ..ModelSpec::default_for(kind, 0.0)
        }
    }

    #[test]
    fn model_defaults() {
        let s = ModelSpec::linear(0.5);
        assert_eq!(s.n_steps(), 1000);
        assert_eq!(s.sigma, 0.7);
        assert_eq!(s.x0, 1.0);
        let sw = ModelSpec::switching(0.3);
        assert_eq!(sw.sigma, 0.1);
        assert_eq!(sw.generator, [[-2.0, 2.0], [2.0, -2.0]]);
    }

    #[test]
    fn linear_zero_noise_first_step() {
        let p = simulate_path(&noiseless(ModelKind::LinearDrift), 1).unwrap();
        assert_eq!(p.states[0], 1.0);
        assert!((p.states[1] - 1.0005).abs() < 1e-15);
        assert_eq!(p.len(), 1001);
        assert!(p.regimes.is_none());
    }

    #[test]
    fn sin_zero_noise_first_step() {
        let p = simulate_path(&noiseless(ModelKind::SinDrift), 1).unwrap();
        // 1 + 0.005 sin(5) by hand: sin(5) = -0.958924274663138...
        let expected = 1.0 + 0.005 * -0.958_924_274_663_138_4;
        assert!((p.states[1] - expected).abs() < 1e-12);
        assert!((p.states[1] - 0.99521).abs() < 1e-5);
    }

    #[test]
    fn noiseless_orbits_match_direct_loops() {
        let lin = simulate_path(&noiseless(ModelKind::LinearDrift), 9).unwrap();
        let sin = simulate_path(&noiseless(ModelKind::SinDrift), 9).unwrap();
        let (mut a, mut b) = (1.0_f64, 1.0_f64);
        for n in 0..=1000 {
            assert_eq!(lin.states[n], a);
            assert_eq!(sin.states[n], b);
            assert_eq!(lin.observations[n], a);
            a *= 1.0 + 0.1 * 0.005;
            b += 0.005 * (5.0 * b).sin();
        }
    }

    #[test]
    fn switching_path_shape_and_x0() {
        let spec = ModelSpec::switching(0.3);
        let p = simulate_path(&spec, 5).unwrap();
        let r = p.regimes.as_ref().unwrap();
        assert_eq!(r.len(), 1001);
        assert!(r.iter().all(|&a| a == 1 || a == 2));
        let u0 = RngStream::new(5, STREAM_SYSTEM).rng().gaussian();
        assert_eq!(p.states[0], (0.1 * u0).sin());
    }

    #[test]
    fn same_seed_same_path() {
        for kind in [
            ModelKind::LinearDrift,
            ModelKind::SinDrift,
            ModelKind::SwitchingSin,
        ] {
            let s = ModelSpec::default_for(kind, 0.5);
            assert_eq!(
                simulate_path(&s, 77).unwrap(),
                simulate_path(&s, 77).unwrap()
            );
            assert_ne!(
                simulate_path(&s, 77).unwrap(),
                simulate_path(&s, 78).unwrap()
            );
        }
    }

    #[test]
    fn validation_errors_name_the_invariant() {
        let mut s = ModelSpec::linear(0.5);
        s.step = 0.0;
        assert!(matches!(simulate_path(&s, 0), Err(Error::Validation(m)) if m.contains("step")));
        let mut s = ModelSpec::linear(0.5);
        s.sigma = -1.0;
        assert!(matches!(simulate_path(&s, 0), Err(Error::Validation(m)) if m.contains("sigma")));
        let mut s = ModelSpec::linear(-0.5);
        s.sigma0 = -0.5;
        assert!(s.validate().is_err());
        let mut s = ModelSpec::switching(0.3);
        s.generator = [[-1.0, 2.0], [2.0, -2.0]];
        assert!(matches!(s.validate(), Err(Error::Validation(m)) if m.contains("sum")));
        s.generator = [[1.0, -1.0], [2.0, -2.0]];
        assert!(s.validate().is_err());
        // the generator is not checked for non-switching models
        let mut s = ModelSpec::linear(0.5);
        s.generator = [[5.0, 5.0], [5.0, 5.0]];
        assert!(s.validate().is_ok());
    }

    #[test]
    fn zero_generator_is_constant() {
        let a = simulate_ctmc_from(&[[0.0; 2]; 2], 5.0, 0.005, Some(1), 3).unwrap();
        assert_eq!(a.len(), 1001);
        assert!(a.iter().all(|&x| x == 1));
        assert!(simulate_ctmc_from(&[[0.0; 2]; 2], 5.0, 0.005, Some(3), 3).is_err());
    }

    #[test]
    fn ensemble_prefix_stability() {
        let s = ModelSpec::sin(0.5);
        let small = generate_ensemble(&s, 10, 11).unwrap();
        let big = generate_ensemble(&s, 100, 11).unwrap();
        assert_eq!(&big[..10], &small[..]);
        let one = generate_ensemble(&s, 1, 11).unwrap();
        assert_eq!(one[0], simulate_path(&s, path_seed(11, 0)).unwrap());
        assert!(generate_ensemble(&s, 0, 11).is_err());
    }

    #[test]
    fn ensemble_is_identical_across_exec_modes() {
        let s = ModelSpec::switching(0.3);
        let a = generate_ensemble_with(Exec::Sequential, &s, 40, 3).unwrap();
        let b = generate_ensemble_with(Exec::Parallel, &s, 40, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ModelSpec::switching(0.3);
        let paths = generate_ensemble(&spec, 3, 99).unwrap();
        let files = write_ensemble_dir(dir.path(), &spec, 99, &paths).unwrap();
        assert_eq!(files.len(), 3);
        let header = fs::read_to_string(&files[0]).unwrap();
        assert!(header.starts_with("n,alpha,x,y\n"));
        let (spec2, seed2, paths2) = read_ensemble_dir(dir.path()).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(seed2, 99);
        assert_eq!(paths2, paths);

        let lin = simulate_path(&ModelSpec::linear(0.5), 1).unwrap();
        let f = dir.path().join("lin.csv");
        lin.write_csv(&f).unwrap();
        assert!(fs::read_to_string(&f).unwrap().starts_with("n,x,y\n"));
        assert_eq!(Path::read_csv(&f, 1).unwrap(), lin);
    }
}
