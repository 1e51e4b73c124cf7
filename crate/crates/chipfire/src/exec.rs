//! Internal switch between rayon-backed and sequential execution of the
//! embarrassingly parallel scans (configuration sweeps, subtree searches,
//! ordering evaluations).
//!
//! Every merge operator used through this module is associative with a
//! total tie-break order, so results and reported node counts are
//! identical whatever the thread count — including one.

#[cfg(feature = "parallel")]
pub(crate) fn map_reduce<T, R, F, M>(items: Vec<T>, eval: F, merge: M) -> Option<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
    M: Fn(R, R) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(eval).reduce_with(merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_reduce<T, R, F, M>(items: Vec<T>, eval: F, merge: M) -> Option<R>
where
    F: Fn(T) -> R,
    M: Fn(R, R) -> R,
{
    items.into_iter().map(eval).reduce(merge)
}

/// Like [`map_reduce`] but with per-worker scratch state, for evaluators
/// that want to reuse allocations across items. `min_len` caps how finely
/// rayon may split the item range (scratch setup costs per split);
/// splitting only reassociates the merge, so it cannot change the result.
#[cfg(feature = "parallel")]
pub(crate) fn map_reduce_with<S, T, R, I, F, M>(
    items: Vec<T>,
    min_len: usize,
    init: I,
    eval: F,
    merge: M,
) -> Option<R>
where
    S: Send,
    T: Send,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, T) -> R + Sync + Send,
    M: Fn(R, R) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items
        .into_par_iter()
        .with_min_len(min_len)
        .map_init(init, |scratch, item| eval(scratch, item))
        .reduce_with(merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_reduce_with<S, T, R, I, F, M>(
    items: Vec<T>,
    _min_len: usize,
    init: I,
    eval: F,
    merge: M,
) -> Option<R>
where
    I: Fn() -> S,
    F: Fn(&mut S, T) -> R,
    M: Fn(R, R) -> R,
{
    let mut scratch = init();
    items.into_iter().map(|item| eval(&mut scratch, item)).reduce(merge)
}
