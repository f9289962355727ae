//! Order-preserving batch execution.
//!
//! With the `parallel` feature, batches are spread over a rayon pool. Without
//! it (or with `jobs == Some(1)`) they run on the calling thread. Output order
//! always matches input order, so results are identical either way.

/// Degree of parallelism for a batch. `None` means "all available cores".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Jobs(pub Option<usize>);

impl Jobs {
    pub const SEQUENTIAL: Jobs = Jobs(Some(1));
    pub const ALL: Jobs = Jobs(None);

    pub fn is_sequential(self) -> bool {
        !cfg!(feature = "parallel") || self.0 == Some(1)
    }
}

pub fn map<T, R, F>(items: &[T], jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs.is_sequential() || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, jobs, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    match jobs.0 {
        None => items.par_iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            // pool creation only fails on resource exhaustion; fall back to the caller's thread
            Err(_) => items.iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _jobs: Jobs, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
