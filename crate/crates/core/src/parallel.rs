//! Data-parallel execution of independent work units.
//!
//! All heavy loops in this crate (Monte Carlo batches, repeated protocol
//! runs, grid sweeps) are embarrassingly parallel: unit `k` derives its own
//! RNG substream from `(seed, k)`, so the output is identical whether units
//! run sequentially or on a thread pool. [`map_indexed`] is the single
//! dispatch point; results come back ordered by index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to execute a batch of independent work units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Run units one after another on the calling thread.
    Sequential,
    /// Run units on the rayon thread pool.
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Parallelism::Rayon
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Parallelism::Sequential
    }
}

/// Applies `f` to every index in `0..n`, returning results in index order.
pub fn map_indexed<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}
