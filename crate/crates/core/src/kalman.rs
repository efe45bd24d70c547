// SPDX-License-Identifier: Apache-2.0

//! Kalman filter for linear-Gaussian models and a first-order extended
//! Kalman filter for scalar nonlinear drift.
//!
//! The system is
//!
//! ```text
//! x_{n+1} = F x_n + G u_n,   E[u u'] = Q0
//! y_n     = H' x_n + v_n,    E[v v'] = R0
//! ```
//!
//! With `S_n = H' R_n H + R0` the recursion is
//!
//! ```text
//! x̄_n     = x̂_n + R_n H S_n⁻¹ (y_n − H' x̂_n)
//! K_n     = F R_n H S_n⁻¹
//! x̂_{n+1} = F x̂_n + K_n (y_n − H' x̂_n)
//! R_{n+1} = F [R_n − R_n H S_n⁻¹ H' R_n] F' + G Q0 G'
//! ```
//!
//! The bracketed filtered covariance is evaluated in Joseph form and the
//! result symmetrized, which keeps `R_n` symmetric positive semidefinite.

use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{ModelKind, ModelSpec};

const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoeffs {
    /// State transition, `n × n`.
    pub f: Matrix,
    /// Noise input, `n × l`.
    pub g: Matrix,
    /// Observation map, `n × m` (observations are `H' x`).
    pub h: Matrix,
    /// System noise covariance, `l × l`.
    pub q0: Matrix,
    /// Observation noise covariance, `m × m`.
    pub r0: Matrix,
}

impl LinearCoeffs {
    pub fn new(f: Matrix, g: Matrix, h: Matrix, q0: Matrix, r0: Matrix) -> Result<Self> {
        let c = Self { f, g, h, q0, r0 };
        c.validate()?;
        Ok(c)
    }

    pub fn scalar(f: f64, g: f64, h: f64, q0: f64, r0: f64) -> Result<Self> {
        Self::new(
            Matrix::scalar(f),
            Matrix::scalar(g),
            Matrix::scalar(h),
            Matrix::scalar(q0),
            Matrix::scalar(r0),
        )
    }

    /// Coefficients of a linear-drift model: `F = 1 + 0.1η`, `G = √η σ`,
    /// `Q0 = 1`, `H = 1`, `R0 = σ₀²`.
    pub fn from_model(spec: &ModelSpec) -> Result<Self> {
        if spec.kind != ModelKind::LinearDrift {
            return Err(Error::validation(format!(
                "Kalman coefficients need a linear model, got `{}`",
                spec.kind
            )));
        }
        spec.validate()?;
        Self::scalar(
            spec.drift_jacobian(0.0),
            spec.step.sqrt() * spec.sigma,
            1.0,
            1.0,
            spec.sigma0 * spec.sigma0,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.f.rows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.f.rows();
        if !self.f.is_square() {
            return Err(Error::validation("F must be square"));
        }
        if self.g.rows() != n {
            return Err(Error::validation("G must have as many rows as F"));
        }
        if self.q0.shape() != (self.g.cols(), self.g.cols()) {
            return Err(Error::validation("Q0 must be l x l where G is n x l"));
        }
        if self.h.rows() != n {
            return Err(Error::validation("H must have as many rows as F"));
        }
        let m = self.h.cols();
        if self.r0.shape() != (m, m) {
            return Err(Error::validation("R0 must be m x m where H is n x m"));
        }
        self.q0.check_psd("Q0", PSD_TOL)?;
        self.r0.check_psd("R0", PSD_TOL)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    /// Predicted mean `x̂_n = E[x_n | y_0..y_{n-1}]`.
    pub x_hat: Matrix,
    /// Prediction error covariance `R_n`.
    pub r: Matrix,
    /// Filtered mean `x̄_n = E[x_n | y_0..y_n]`. Equals `x_hat` until updated.
    pub x_bar: Matrix,
    /// Gain `K_n` used at this step; zero until updated.
    pub gain: Matrix,
}

/// Output of one [`kf_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct KfUpdate {
    /// The input state with `x_bar` and `gain` filled in for step `n`.
    pub filtered: KalmanState,
    /// Prior for step `n + 1`.
    pub predicted: KalmanState,
}

pub fn kf_init(x0_mean: &[f64], r0_cov: &Matrix) -> Result<KalmanState> {
    if r0_cov.shape() != (x0_mean.len(), x0_mean.len()) {
        return Err(Error::validation("initial covariance must be n x n"));
    }
    r0_cov.check_psd("initial covariance", PSD_TOL)?;
    let x = Matrix::column(x0_mean);
    Ok(KalmanState {
        x_hat: x.clone(),
        r: r0_cov.clone(),
        x_bar: x,
        gain: Matrix::zeros(x0_mean.len(), 0),
    })
}

pub fn kf_step(state: &KalmanState, coeffs: &LinearCoeffs, y: &[f64]) -> Result<KfUpdate> {
    let n = coeffs.state_dim();
    let m = coeffs.obs_dim();
    if state.x_hat.shape() != (n, 1) || state.r.shape() != (n, n) {
        return Err(Error::validation(
            "state dimension does not match coefficients",
        ));
    }
    if y.len() != m {
        return Err(Error::validation(format!(
            "observation has length {}, expected {m}",
            y.len()
        )));
    }
    let ht = coeffs.h.transpose();
    let rh = &state.r * &coeffs.h;
    let s = &(&ht * &rh) + &coeffs.r0;
    let s_inv = s.lu().map_err(|_| Error::Singular {
        context: "innovation covariance",
        matrix: s.to_string(),
    })?;
    // filter gain R H S⁻¹ (n × m)
    let filter_gain = s_inv.solve(&rh.transpose())?.transpose();
    let innovation = &Matrix::column(y) - &(&ht * &state.x_hat);
    let x_bar = &state.x_hat + &(&filter_gain * &innovation);

    // Joseph form: (I − L H') R (I − L H')' + L R0 L'
    let a = &Matrix::identity(n) - &(&filter_gain * &ht);
    let filtered_cov = &(&(&a * &state.r) * &a.transpose())
        + &(&(&filter_gain * &coeffs.r0) * &filter_gain.transpose());
    let ft = coeffs.f.transpose();
    let r_next = (&(&(&coeffs.f * &filtered_cov) * &ft)
        + &(&(&coeffs.g * &coeffs.q0) * &coeffs.g.transpose()))
        .symmetrize();
    let gain = &coeffs.f * &filter_gain;
    let x_hat_next = &coeffs.f * &x_bar;

    Ok(KfUpdate {
        filtered: KalmanState {
            x_hat: state.x_hat.clone(),
            r: state.r.clone(),
            x_bar,
            gain,
        },
        predicted: KalmanState {
            x_hat: x_hat_next.clone(),
            r: r_next,
            x_bar: x_hat_next,
            gain: Matrix::zeros(n, 0),
        },
    })
}

/// Runs the filter over `observations`; `coeffs(n)` gives the step-`n`
/// coefficients. Output `n` holds `x̂_n`, `R_n`, `x̄_n` and `K_n`.
pub fn kf_run<'a, C>(
    coeffs: C,
    observations: &[Vec<f64>],
    init: &KalmanState,
) -> Result<Vec<KalmanState>>
where
    C: Fn(usize) -> &'a LinearCoeffs,
{
    if observations.is_empty() {
        return Err(Error::validation("no observations"));
    }
    let mut out = Vec::with_capacity(observations.len());
    let mut state = init.clone();
    for (n, y) in observations.iter().enumerate() {
        let upd = kf_step(&state, coeffs(n), y)?;
        out.push(upd.filtered);
        state = upd.predicted;
    }
    Ok(out)
}

/// [`kf_run`] with time-invariant coefficients.
pub fn kf_run_invariant(
    coeffs: &LinearCoeffs,
    observations: &[Vec<f64>],
    init: &KalmanState,
) -> Result<Vec<KalmanState>> {
    coeffs.validate()?;
    kf_run(|_| coeffs, observations, init)
}

/// Scalar filter output for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPoint {
    pub x_hat: f64,
    pub r: f64,
    pub x_bar: f64,
    pub gain: f64,
}

impl FilterPoint {
    /// Prior with known mean and variance.
    pub fn prior(mean: f64, var: f64) -> Self {
        Self {
            x_hat: mean,
            r: var,
            x_bar: mean,
            gain: 0.0,
        }
    }
}

/// Scalar filter with mean propagated through `drift` and variance through
/// its derivative `jacobian`, both evaluated at the filtered mean.
/// `process_var` is the added state noise variance per step and `obs_var` the
/// observation noise variance; the observation map is the identity.
///
/// With a linear `drift` this is exactly the scalar Kalman filter.
pub fn ekf_run_with<D, J>(
    drift: D,
    jacobian: J,
    process_var: f64,
    obs_var: f64,
    observations: &[f64],
    init: FilterPoint,
) -> Result<Vec<FilterPoint>>
where
    D: Fn(f64) -> f64,
    J: Fn(f64) -> f64,
{
    if !(process_var >= 0.0 && obs_var >= 0.0) {
        return Err(Error::validation("noise variances must be >= 0"));
    }
    if init.r.is_nan() || init.r < 0.0 {
        return Err(Error::validation("initial variance must be >= 0"));
    }
    let mut out = Vec::with_capacity(observations.len());
    let (mut x_hat, mut r) = (init.x_hat, init.r);
    for &y in observations {
        let s = r + obs_var;
        if !s.is_finite() {
            return Err(Error::Singular {
                context: "innovation variance",
                matrix: format!("[{s:e}]"),
            });
        }
        // s == 0 means both prior and observation are exact; the pseudo-inverse gain is 0
        let l = if s > 0.0 { r / s } else { 0.0 };
        let x_bar = x_hat + l * (y - x_hat);
        let a = 1.0 - l;
        let filtered = a * a * r + l * l * obs_var;
        let jac = jacobian(x_bar);
        out.push(FilterPoint {
            x_hat,
            r,
            x_bar,
            gain: jac * l,
        });
        x_hat = drift(x_bar);
        r = jac * jac * filtered + process_var;
    }
    Ok(out)
}

/// Extended Kalman filter for a [`ModelKind::SinDrift`] model.
pub fn ekf_run(
    model: &ModelSpec,
    observations: &[f64],
    init: FilterPoint,
) -> Result<Vec<FilterPoint>> {
    if model.kind != ModelKind::SinDrift {
        return Err(Error::validation(format!(
            "EKF needs a sin-drift model, got `{}`",
            model.kind
        )));
    }
    model.validate()?;
    ekf_run_with(
        |x| model.drift(x),
        |x| model.drift_jacobian(x),
        model.step * model.sigma * model.sigma,
        model.sigma0 * model.sigma0,
        observations,
        init,
    )
}

/// Scalar Kalman filter for a [`ModelKind::LinearDrift`] model.
pub fn kf_run_scalar(
    model: &ModelSpec,
    observations: &[f64],
    init: FilterPoint,
) -> Result<Vec<FilterPoint>> {
    if model.kind != ModelKind::LinearDrift {
        return Err(Error::validation(format!(
            "Kalman filter needs a linear model, got `{}`",
            model.kind
        )));
    }
    model.validate()?;
    ekf_run_with(
        |x| model.drift(x),
        |x| model.drift_jacobian(x),
        model.step * model.sigma * model.sigma,
        model.sigma0 * model.sigma0,
        observations,
        init,
    )
}

impl From<&KalmanState> for FilterPoint {
    /// First component of a (possibly vector) state.
    fn from(s: &KalmanState) -> Self {
        Self {
            x_hat: s.x_hat[(0, 0)],
            r: s.r[(0, 0)],
            x_bar: s.x_bar[(0, 0)],
            gain: if s.gain.cols() > 0 {
                s.gain[(0, 0)]
            } else {
                0.0
            },
        }
    }
}

/// Writes `n, x_hat, x_bar, R, K`.
pub fn write_filter_csv(path: impl AsRef<FsPath>, points: &[FilterPoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "x_hat", "x_bar", "R", "K"])?;
    for (n, p) in points.iter().enumerate() {
        w.write_record([
            n.to_string(),
            p.x_hat.to_string(),
            p.x_bar.to_string(),
            p.r.to_string(),
            p.gain.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
