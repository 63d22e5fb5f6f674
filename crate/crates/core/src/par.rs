//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it they are plain sequential loops with identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f` applied to every item, results in input order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Best of `f(i)` over `0..n` under a strict total preference. `None`
/// values are skipped. The result does not depend on how work is split.
pub fn best_over_range<R, F, P>(n: u64, f: F, prefer: P) -> Option<R>
where
    R: Send,
    F: Fn(u64) -> Option<R> + Sync + Send,
    P: Fn(&R, &R) -> bool + Sync + Send,
{
    let pick = |a: Option<R>, b: Option<R>| match (a, b) {
        (Some(a), Some(b)) => Some(if prefer(&b, &a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(&f).reduce(|| None, pick)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(None, pick)
    }
}

/// Number of worker threads that [`with_threads`] would use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` on a pool of `threads` workers (`None`: machine default).
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            None => f(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(f),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
