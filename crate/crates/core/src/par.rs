//! Index-ordered batch mapping.
//!
//! With the `parallel` feature, [`map`] spreads items over the rayon pool;
//! without it, it runs in order on the calling thread. Both return results
//! in input order, so outputs never depend on scheduling.

/// Applies `f` to every item, possibly in parallel; results in input order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

/// Always sequential; the reference the parallel path is compared against.
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
