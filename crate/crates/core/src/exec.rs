//! Execution helpers: data-parallel loops with a sequential fallback.
//!
//! With the `parallel` feature (default) the loops run on rayon; without it
//! they degrade to plain iterators. All reductions are order-independent
//! (max/min/sum of f64 through a deterministic combiner), so both modes
//! produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting into a `Vec` in index order.
pub fn par_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maximum of `f(i)` over `0..n`. `n` must be nonzero.
pub fn par_max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    assert!(n > 0);
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| f64::NEG_INFINITY, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Minimum of `f(i)` over `0..n`. `n` must be nonzero.
pub fn par_min<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    assert!(n > 0);
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| f64::INFINITY, f64::min)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::INFINITY, f64::min)
    }
}

/// Sum of `f(i)` over `0..n`.
///
/// The parallel reduction sums disjoint chunks; with f64 this can differ from
/// the sequential sum by rounding only. Callers that require byte-identical
/// output across modes (report emission) sum sequentially instead.
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        // Fixed chunk length keeps the reduction tree independent of the
        // worker count, so results are reproducible run to run.
        let chunk = 4096;
        let chunks = n.div_ceil(chunk);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = usize::min(lo + chunk, n);
                (lo..hi).map(&f).sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let chunk = 4096;
        let chunks = n.div_ceil(chunk);
        (0..chunks)
            .map(|c| {
                let lo = c * chunk;
                let hi = usize::min(lo + chunk, n);
                (lo..hi).map(&f).sum::<f64>()
            })
            .sum()
    }
}

/// Applies `f` to each mutable chunk of `data` of length `chunk_len`,
/// passing the chunk index.
pub fn par_chunks_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
    }
}
