//! Deterministic execution of embarrassingly parallel ensembles.
//!
//! Work is split into fixed-size chunks that do not depend on the worker
//! count. Each chunk is evaluated sequentially and the per-chunk results are
//! merged in chunk order, so a given seed produces bit-identical output
//! whether the run is sequential, parallel, or parallel with a different
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::ops::Range;

/// How an ensemble loop is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Rayon work-stealing pool. Falls back to sequential when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Default number of items per chunk. Small enough to load-balance, large
/// enough that chunk dispatch is not the bottleneck.
pub const DEFAULT_CHUNK: usize = 1024;

fn chunk_ranges(n_items: usize, chunk: usize) -> Vec<Range<usize>> {
    assert!(chunk > 0);
    (0..n_items.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n_items))
        .collect()
}

/// Evaluate `eval` on fixed chunks of `0..n_items` and return the per-chunk
/// results in chunk order.
pub fn map_chunks<A, F>(mode: ExecMode, n_items: usize, chunk: usize, eval: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<usize>) -> A + Sync + Send,
{
    let ranges = chunk_ranges(n_items, chunk);
    match mode {
        ExecMode::Sequential => ranges.into_iter().map(eval).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                ranges.into_par_iter().map(eval).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                ranges.into_iter().map(eval).collect()
            }
        }
    }
}

/// Chunked map-reduce: `item` produces one value per index, `fold` adds it to
/// a chunk accumulator, and the chunk accumulators are merged in chunk order.
pub fn map_reduce<T, A, I, FF, M>(
    mode: ExecMode,
    n_items: usize,
    init: A,
    item: I,
    fold: FF,
    merge: M,
) -> A
where
    A: Send + Clone + Sync,
    I: Fn(usize) -> T + Sync + Send,
    FF: Fn(&mut A, T) + Sync + Send,
    M: Fn(&mut A, A),
{
    let partials = map_chunks(mode, n_items, DEFAULT_CHUNK, |range| {
        let mut acc = init.clone();
        for i in range {
            fold(&mut acc, item(i));
        }
        acc
    });
    let mut total = init;
    for p in partials {
        merge(&mut total, p);
    }
    total
}

/// Per-item map collected into a Vec in index order.
pub fn map_collect<T, F>(mode: ExecMode, n_items: usize, item: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let chunks = map_chunks(mode, n_items, DEFAULT_CHUNK, |range| {
        range.map(&item).collect::<Vec<_>>()
    });
    chunks.into_iter().flatten().collect()
}

/// Configure the global rayon pool size. No-op without the `parallel`
/// feature or if a pool has already been built.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_covers_range_exactly() {
        let ranges = chunk_ranges(2500, 1024);
        assert_eq!(ranges.len(), 3);
        assert_eq!(ranges[2], 2048..2500);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        // Sum of pseudo-random f64s: chunked reduction must not depend on mode.
        let item = |i: usize| ((i as f64) * 0.7548776662466927).fract();
        let run = |mode| {
            map_reduce(
                mode,
                10_000,
                0.0f64,
                item,
                |a, x| *a += x,
                |a, b| *a += b,
            )
        };
        let seq = run(ExecMode::Sequential);
        let par = run(ExecMode::Parallel);
        assert_eq!(seq.to_bits(), par.to_bits());
    }
}
