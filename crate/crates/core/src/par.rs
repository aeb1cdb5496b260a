//! Data-parallel map over index ranges with a sequential fallback.
//!
//! With the `parallel` feature, [`Execution::Parallel`] runs on rayon; the
//! `W_DISTILL_THREADS` environment variable caps the worker count. Without
//! the feature every map is sequential. Results are always returned in index
//! order, so callers that derive per-index RNG streams get identical output
//! either way.

/// Environment variable capping simulation parallelism.
pub const THREADS_ENV: &str = "W_DISTILL_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

/// Parsed `W_DISTILL_THREADS`; `None` when unset, empty or not a positive
/// integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// `f(0), …, f(n−1)` in index order.
pub fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match capped_pool() {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).into_par_iter().map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn capped_pool() -> Option<&'static rayon::ThreadPool> {
    use std::sync::OnceLock;
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let cap = thread_cap()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(cap)
            .build()
            .ok()
    })
    .as_ref()
}

/// Worker count a parallel map would use.
pub fn effective_threads(exec: Execution) -> usize {
    match exec {
        Execution::Sequential => 1,
        Execution::Parallel => worker_count(),
    }
}

#[cfg(feature = "parallel")]
fn worker_count() -> usize {
    capped_pool().map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn worker_count() -> usize {
    1
}
