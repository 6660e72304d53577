//! Parallel execution of independent verification cases.
//!
//! Identity checks are pure functions of their inputs, so a suite of cases
//! can run in any order or concurrently.  With the `parallel` feature the
//! cases are distributed over a rayon thread pool (sized by the
//! `VERTEX_CALC_THREADS` environment variable when set); without it they run
//! sequentially.  Results are returned in input order either way, so output
//! is deterministic.

/// How to schedule a batch of independent cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Use the rayon thread pool (falls back to sequential when the
    /// `parallel` feature is disabled).
    Rayon,
    /// Run cases one after another on the calling thread.
    Sequential,
}

/// Reads the `VERTEX_CALC_THREADS` cap, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("VERTEX_CALC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Applies `f` to every case, scheduling per `mode`, and returns the results
/// in input order.
pub fn run_cases<C, R, F>(mode: Parallelism, cases: Vec<C>, f: F) -> Vec<R>
where
    C: Send + Sync,
    R: Send,
    F: Fn(&C) -> R + Sync + Send,
{
    match mode {
        Parallelism::Sequential => cases.iter().map(|c| f(c)).collect(),
        Parallelism::Rayon => run_rayon(cases, f),
    }
}

#[cfg(feature = "parallel")]
fn run_rayon<C, R, F>(cases: Vec<C>, f: F) -> Vec<R>
where
    C: Send + Sync,
    R: Send,
    F: Fn(&C) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || cases.par_iter().map(|c| f(c)).collect();
    match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| run()),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_rayon<C, R, F>(cases: Vec<C>, f: F) -> Vec<R>
where
    C: Send + Sync,
    R: Send,
    F: Fn(&C) -> R + Sync + Send,
{
    cases.iter().map(|c| f(c)).collect()
}
