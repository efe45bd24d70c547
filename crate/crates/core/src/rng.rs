// SPDX-License-Identifier: Apache-2.0

//! Splittable, counter-based seeding.
//!
//! A stream is identified by `(seed, stream_id)`. The pair is hashed with a
//! SplitMix64 finalizer into a ChaCha key, so any stream can be recreated in
//! O(1) without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// System noise `u_n`.
pub const STREAM_SYSTEM: u64 = 0;
/// Observation noise `v_n`.
pub const STREAM_OBSERVATION: u64 = 1;
/// Regime jump times and the initial regime.
pub const STREAM_REGIME: u64 = 2;
/// Network weight initialization.
pub const STREAM_INIT: u64 = 3;
/// Dataset shuffling.
pub const STREAM_SHUFFLE: u64 = 4;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `(base, index)` into a child seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index.wrapping_mul(GOLDEN).rotate_left(17))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let key = derive_seed(self.seed, self.stream_id);
        StreamRng(ChaCha12Rng::seed_from_u64(key))
    }
}

/// Generator handed out by [`RngStream::rng`].
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha12Rng);

impl StreamRng {
    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.0)
    }

    /// Exponential with the given rate. Returns `+inf` for a zero rate.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        // 1 - U lies in (0, 1], so the log is finite.
        -(1.0 - self.uniform()).ln() / rate
    }

    pub fn inner(&mut self) -> &mut ChaCha12Rng {
        &mut self.0
    }
}
