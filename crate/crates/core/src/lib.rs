// SPDX-License-Identifier: Apache-2.0

//! Neural-network state estimation ("deep filtering") for scalar
//! state-space models, with exact Kalman and extended Kalman baselines and
//! an experiment harness that scores all of them on Monte Carlo ensembles.
//!
//! The pipeline is:
//!
//! 1. simulate a training ensemble from a *nominal* model ([`models`]);
//! 2. cut every path into observation windows and train a small sigmoid
//!    network on them with plain SGD ([`deepfilter`], [`neural`]);
//! 3. run the network, and the Kalman/EKF baselines ([`kalman`]), on a fresh
//!    ensemble from the *actual* model;
//! 4. score each estimate against the true states ([`metrics`]).
//!
//! [`harness`] wires these together for parameter sweeps and the
//! `deepfilt` command-line tool.
//!
//! Per-path work runs in parallel through [`exec::Exec`] when the default
//! `parallel` feature is enabled. Results never depend on the thread count.

pub mod deepfilter;
pub mod error;
pub mod exec;
pub mod harness;
pub mod kalman;
pub mod kv;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod neural;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;
