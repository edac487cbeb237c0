// SPDX-License-Identifier: Apache-2.0

//! Data-parallel execution of independent work items.
//!
//! Grid scans and survival averages evaluate many independent points. With the
//! `parallel` feature (default) they fan out over a rayon pool; without it the
//! same code runs sequentially. Results are collected by index, so output is
//! bit-identical regardless of scheduling or worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0..n)` and collect in index order, using the compiled-in
/// default strategy (parallel when the `parallel` feature is on).
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Sequential evaluation; always available, used by the benchmark baseline.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Rayon-parallel evaluation.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Run `f` inside a pool restricted to `jobs` worker threads (when the
/// `parallel` feature is active and `jobs` is given); otherwise just call it.
/// `jobs = Some(1)` forces sequential execution inside a one-thread pool.
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(j) if j > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map(|pool| pool.install(f))
                .unwrap_or_else(|_| panic!("failed to build worker pool")),
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let out = map_indexed(100, |i| i * i);
        let seq = map_indexed_seq(100, |i| i * i);
        assert_eq!(out, seq);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential_bitwise() {
        let f = |i: usize| ((i as f64) * 0.7).sin() / (i as f64 + 1.0);
        let par = map_indexed_par(1000, f);
        let seq = map_indexed_seq(1000, f);
        assert!(par.iter().zip(&seq).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn jobs_scoping_runs_closure() {
        let v = with_jobs(Some(2), || map_indexed(10, |i| i + 1));
        assert_eq!(v[9], 10);
        let v = with_jobs(None, || 42);
        assert_eq!(v, 42);
    }
}
