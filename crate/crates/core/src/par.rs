//! Data-parallel trial loops.
//!
//! With the `parallel` feature the loops run on a rayon pool; without it, or
//! when [`Execution::Sequential`] is requested, they run in index order on the
//! calling thread. Results are always returned in index order.

use crate::error::Result;

/// Environment variable holding the worker count for parallel execution.
pub const WORKERS_ENV: &str = "SPECDET_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Parallel when compiled with the `parallel` feature, sequential otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`.
pub fn map<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return with_pool(|| (0..n).into_par_iter().map(&f).collect());
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fallible [`map`]; returns the error of the lowest failing index.
pub fn try_map<T, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let results = map(exec, n, f);
    results.into_iter().collect()
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    match std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        Some(workers) if workers > 0 => match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        },
        _ => op(),
    }
}
