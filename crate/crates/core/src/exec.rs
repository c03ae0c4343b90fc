//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on
//! rayon; without it every mode falls back to a plain sequential loop.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `false` when the crate was built without the `parallel` feature.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `f` over `items`, returning results in input order.
pub fn par_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`par_map`] but stops at the first error in input order.
pub fn try_par_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    par_map(exec, items, f).into_iter().collect()
}

/// Runs `body` with at most `workers` threads; `None` keeps rayon's global
/// pool (available parallelism).
pub fn with_workers<R: Send>(workers: Option<usize>, body: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(body()),
        Some(0) => Err(Error::Domain("worker count must be positive".into())),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            Ok(pool.install(body))
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(body()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = par_map(Execution::Sequential, &xs, |x| x * x);
        let par = par_map(Execution::Parallel, &xs, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 998_001);
    }

    #[test]
    fn first_error_wins() {
        let xs: Vec<u32> = (0..100).collect();
        let r = try_par_map(Execution::Parallel, &xs, |&x| {
            if x % 30 == 29 {
                Err(Error::Domain(format!("{x}")))
            } else {
                Ok(x)
            }
        });
        assert!(matches!(r, Err(Error::Domain(s)) if s == "29"));
    }

    #[test]
    fn worker_pool() {
        let xs: Vec<u32> = (0..64).collect();
        let out = with_workers(Some(2), || par_map(Execution::Parallel, &xs, |x| x + 1)).unwrap();
        assert_eq!(out[63], 64);
        assert!(with_workers(Some(0), || ()).is_err());
    }
}
