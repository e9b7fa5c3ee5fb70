//! Worker-count-independent parallel accumulation.
//!
//! Monte Carlo runs must produce bit-identical artifacts whether they use
//! one thread or eight. Two ingredients deliver that: every work item owns
//! an RNG stream derived from its index alone, and floating-point
//! reductions always happen in the same grouping. Items are folded in
//! fixed-size chunks (the chunk size never depends on the worker count),
//! chunks run on a rayon pool, and the per-chunk results are merged
//! sequentially in index order.

use rayon::prelude::*;

/// Items per chunk. A constant, not a function of the worker count, so the
/// reduction tree is identical however many threads execute it.
const CHUNK: usize = 1024;

/// Fold the items `0..total` into an accumulator, `workers` threads wide.
///
/// `fold_item` receives the item index, to be used as the RNG stream id;
/// `merge` combines two chunk accumulators and is applied left-to-right in
/// chunk order. `workers == 0` is treated as 1.
pub fn chunked_fold<A, I, F, M>(total: usize, workers: usize, init: I, fold_item: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: FnMut(A, A) -> A,
{
    if total == 0 {
        return init();
    }
    let n_chunks = total.div_ceil(CHUNK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("rayon pool construction only fails on resource exhaustion");
    let chunks: Vec<A> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(total);
                let mut acc = init();
                for item in lo..hi {
                    fold_item(&mut acc, item as u64);
                }
                acc
            })
            .collect()
    });
    let mut iter = chunks.into_iter();
    let first = iter.next().expect("total > 0 gives at least one chunk");
    iter.fold(first, merge)
}
