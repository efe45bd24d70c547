// SPDX-License-Identifier: Apache-2.0

//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel map in the crate goes through [`Exec::map`]. Results are
//! always collected in index order, so the outcome of a computation does not
//! depend on the execution mode or on the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to run an index-parallel map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Runs on the current rayon pool. Falls back to sequential execution when
    /// the crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `0..n` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    /// Like [`Exec::map`] over a slice.
    pub fn map_slice<'a, S, T, F>(self, items: &'a [S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&'a S) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Fallible map; returns the first error in index order.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Runs `f` with up to `workers` threads. `workers == 1` selects
    /// sequential mode; `0` uses the global pool.
    pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce(Exec) -> R + Send) -> R {
        if workers == 1 {
            return f(Exec::Sequential);
        }
        #[cfg(feature = "parallel")]
        {
            if workers > 1 {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                    return pool.install(|| f(Exec::Parallel));
                }
            }
            f(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        f(Exec::Sequential)
    }
}
