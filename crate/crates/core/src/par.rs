//! Ordered data-parallel map. Results always come back in index order so
//! reductions downstream are bit-reproducible with or without threads.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Applies `f` to every item in place; the first error in index order wins.
#[cfg(feature = "parallel")]
pub(crate) fn try_for_each_mut<T, E, F>(items: &mut [T], f: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(&mut T) -> Result<(), E> + Sync + Send,
{
    use rayon::prelude::*;
    let results: Vec<Result<(), E>> = items.par_iter_mut().map(f).collect();
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_for_each_mut<T, E, F>(items: &mut [T], f: F) -> Result<(), E>
where
    F: Fn(&mut T) -> Result<(), E>,
{
    items.iter_mut().try_for_each(f)
}
