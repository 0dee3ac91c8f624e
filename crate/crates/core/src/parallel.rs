//! Job-level parallelism for independent runs.
//!
//! With the `parallel` feature the jobs run on a rayon pool capped by the
//! `HEAVYFLOW_THREADS` environment variable; without it they run in order.
//! Results always come back in input order, so reductions over them are
//! deterministic either way.

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "HEAVYFLOW_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool when the feature is enabled, otherwise sequential.
    #[default]
    Parallel,
}

/// Worker count from `HEAVYFLOW_THREADS`; `None` when unset or invalid.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Maps `f` over `items`, preserving order.
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Parallel => parallel_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().map(&f).collect();
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a pool of {n} threads ({e}); using the global pool");
                run()
            }
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let seq = map_collect(Execution::Sequential, &items, |x| x * x);
        let par = map_collect(Execution::Parallel, &items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(par[17], 289);
    }
}
