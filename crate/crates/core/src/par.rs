//! Data-parallel loops with a sequential fallback.
//!
//! Every parallel site in the crate routes through these helpers so that the
//! `parallel` feature can be switched off without touching call sites. Results
//! are bit-identical in both modes: each work item is independent, `map_collect`
//! preserves index order, and all floating-point reductions happen sequentially
//! over the collected vector.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len`, collecting results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Sum `f(i)` over `0..len`. Integer addition is associative, so the parallel
/// reduction is order-insensitive and exactly reproducible.
#[cfg(feature = "parallel")]
pub(crate) fn sum_u64<F>(len: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    (0..len).into_par_iter().map(f).sum()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sum_u64<F>(len: usize, f: F) -> u64
where
    F: Fn(usize) -> u64,
{
    (0..len).map(f).sum()
}
