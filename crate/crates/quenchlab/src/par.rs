//! Data-parallel helpers. With the `parallel` feature the `Parallel`
//! strategy runs on the rayon pool; without it every strategy runs in order.
//! Outputs are always returned in index order.

/// How an index range is traversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `0..total` into contiguous chunks and maps each `(start, end)`.
pub fn map_chunks<R, F>(exec: Execution, total: u64, chunks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, u64) -> R + Sync + Send,
{
    let chunks = chunks.max(1) as u64;
    let step = total.div_ceil(chunks).max(1);
    let n = total.div_ceil(step) as usize;
    map_indices(exec, n, |i| {
        let start = i as u64 * step;
        f(start, (start + step).min(total))
    })
}

/// Number of chunks worth creating for a parallel sweep.
pub fn default_chunks(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads() * 4;
    }
    let _ = exec;
    1
}
