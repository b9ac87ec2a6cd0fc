//! Execution helpers: rayon when the `parallel` feature is on, otherwise a
//! sequential fallback with the same signatures.
//!
//! Only embarrassingly parallel maps go through here (per-cell construction,
//! per-row voxel sweeps). Results are collected in index order and all
//! floating-point reductions happen sequentially afterwards, so outputs are
//! identical whatever the thread count.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference path, always compiled; the construction benches use
/// it to compare against the parallel map within one build.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
