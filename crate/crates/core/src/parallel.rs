//! Deterministic fan-out of path batches.
//!
//! Paths are cut into fixed-size batches independent of the worker count;
//! batch results come back in index order and callers fold them
//! sequentially, so reductions are reproducible under any schedule.

use std::ops::Range;

use rayon::prelude::*;

/// Paths per batch.
pub const BATCH_PATHS: u64 = 2048;

/// Applies `f` to consecutive path ranges covering `0..paths` and returns
/// the results in range order.
pub fn map_batches<T, F>(paths: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let batches = paths.div_ceil(BATCH_PATHS);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH_PATHS;
            f(start..(start + BATCH_PATHS).min(paths))
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
