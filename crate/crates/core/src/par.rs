//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool that
//! is current on the calling thread; without it everything runs in order on the
//! caller. Results are always returned in index order, so reductions over them
//! do not depend on the degree of parallelism.

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Executor {
    Sequential,
    #[default]
    Parallel,
}

impl Executor {
    /// `true` when this build can actually run jobs concurrently.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Evaluates `f(i)` for `i in 0..n` and collects the results in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with(Executor::default(), n, f)
}

pub fn map_range_with<T, F>(exec: Executor, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Executor::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `op` with at most `threads` workers. `None` uses the global pool.
pub fn with_threads<R, F>(threads: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("failed to build rayon thread pool");
            return pool.install(op);
        }
    }
    let _ = threads;
    op()
}
