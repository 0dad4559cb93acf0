//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) the helpers run on the rayon
//! global pool; without it everything falls back to plain iterators. Every
//! helper returns results in input order, so outputs never depend on how the
//! work was scheduled.

/// How an operation distributes its inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon-backed. Falls back to sequential when the `parallel` feature is off.
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `op` over `items`, preserving order.
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(op).collect();
    }
    let _ = exec;
    items.iter().map(op).collect()
}

/// Maps `op` over `0..len`, preserving order.
pub fn map_range<R, F>(exec: Execution, len: usize, op: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(op).collect();
    }
    let _ = exec;
    (0..len).map(op).collect()
}
