//! Data-parallel execution helpers.
//!
//! Replicate generation, Monte Carlo sweeps, and per-series summaries
//! are embarrassingly parallel. With the default `parallel` feature the
//! indexed map runs on the rayon thread pool; without it the same call
//! degrades to a sequential loop. [`map_indexed_seq`] is always
//! sequential and serves as the baseline in the bench suite.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to `0..count`, in parallel when the `parallel` feature is
/// enabled. Results are returned in index order either way.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Applies `f` to `0..count`, in parallel when the `parallel` feature is
/// enabled. Results are returned in index order either way.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(count, f)
}

/// Sequential counterpart of [`map_indexed`], always single-threaded.
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
