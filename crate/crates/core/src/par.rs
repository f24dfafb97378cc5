//! Index-parallel map with a sequential fallback.
//!
//! Results always come back in index order, and callers reduce them
//! sequentially, so a parallel run is bitwise identical to a serial one.

use std::num::NonZeroUsize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker threads; `None` uses every available core. Without the
    /// `parallel` feature this runs sequentially.
    Parallel(Option<NonZeroUsize>),
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel(None)
    }
}

impl Execution {
    pub fn with_threads(threads: usize) -> Self {
        match NonZeroUsize::new(threads) {
            Some(t) if t.get() == 1 => Execution::Sequential,
            t => Execution::Parallel(t),
        }
    }

    /// Computes `f(0), ..., f(len - 1)` and returns them in order.
    pub fn map_indices<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..len).map(f).collect(),
            Execution::Parallel(threads) => parallel_map(threads, len, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(threads: Option<NonZeroUsize>, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..len).into_par_iter().map(&f).collect();
    match threads {
        None => run(),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.get()).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_threads: Option<NonZeroUsize>, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let f = |i: usize| (i as f64).sqrt();
        let serial = Execution::Sequential.map_indices(1000, f);
        let par = Execution::with_threads(4).map_indices(1000, f);
        assert_eq!(serial, par);
    }

    #[test]
    fn one_thread_means_sequential() {
        assert_eq!(Execution::with_threads(1), Execution::Sequential);
        assert_eq!(Execution::with_threads(0), Execution::Parallel(None));
    }
}
