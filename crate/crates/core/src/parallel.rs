use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f(i)` for `i in 0..count` on `workers` threads and returns results in index order.
///
/// `workers == 0` uses rayon's default pool size.
pub(crate) fn map_indexed<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Collects per-index results, reporting every failure with its index.
pub(crate) fn collect_indexed<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((i, e)),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Nodes(failed))
    }
}
