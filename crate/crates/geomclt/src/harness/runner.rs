//! Replication driver. The task receives its replication index and must
//! derive all randomness from it, so the result vector is identical
//! whatever the worker count.

use crate::error::Result;

/// Runs `task` for indices `0..count` and collects results in index order.
///
/// `workers == 1` runs sequentially on the calling thread. Any other value
/// uses a data-parallel pool: `0` defers to the library default,
/// otherwise the pool is sized to `workers`. Compiled without the
/// `parallel` feature every value runs sequentially.
pub fn replicate<T, F>(count: u64, workers: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if count == 0 {
        return Ok(Vec::new());
    }
    #[cfg(feature = "parallel")]
    {
        if workers != 1 {
            use rayon::prelude::*;
            let run = || (0..count).into_par_iter().map(&task).collect::<Result<Vec<T>>>();
            return if workers == 0 {
                run()
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| crate::error::Error::invalid(format!("thread pool: {e}")))?;
                pool.install(run)
            };
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    (0..count).map(task).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let out = replicate(100, 0, |i| Ok(i * i)).unwrap();
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let seq = replicate(64, 1, |i| Ok(i.wrapping_mul(0x9e3779b9))).unwrap();
        let par = replicate(64, 4, |i| Ok(i.wrapping_mul(0x9e3779b9))).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn propagates_task_errors() {
        let res = replicate(8, 2, |i| {
            if i == 5 {
                Err(crate::error::Error::invalid("boom"))
            } else {
                Ok(i)
            }
        });
        assert!(res.is_err());
    }

    #[test]
    fn zero_count_is_empty() {
        let out: Vec<u64> = replicate(0, 4, |i| Ok(i)).unwrap();
        assert!(out.is_empty());
    }
}
