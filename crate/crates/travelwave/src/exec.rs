//! Data-parallel helpers with a sequential fallback.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Environment variable read by [`init_threads`].
pub const THREADS_ENV: &str = "TRAVELWAVE_THREADS";

/// Configure the global worker pool from `TRAVELWAVE_THREADS`. Idempotent.
pub fn init_threads() -> usize {
    static N: OnceLock<usize> = OnceLock::new();
    *N.get_or_init(|| {
        let want = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
        #[cfg(feature = "parallel")]
        {
            if let Some(n) = want {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
            }
            rayon::current_num_threads()
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = want;
            1
        }
    })
}

impl Exec {
    /// `(0..n).map(f).collect()` in index order.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    (0..n).into_par_iter().map(f).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    (0..n).map(f).collect()
                }
            }
        }
    }

    /// Fallible variant of [`Exec::map`]; the first error in index order wins.
    pub fn try_map<R, E, F>(self, n: usize, f: F) -> Result<Vec<R>, E>
    where
        R: Send,
        E: Send,
        F: Fn(usize) -> Result<R, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Run `f(chunk_index, chunk)` over consecutive `chunk`-sized pieces of `data`.
    pub fn for_each_chunk<T, E, F>(self, data: &mut [T], chunk: usize, f: F) -> Result<(), E>
    where
        T: Send,
        E: Send,
        F: Fn(usize, &mut [T]) -> Result<(), E> + Sync + Send,
    {
        match self {
            Exec::Sequential => data.chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c)),
            Exec::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    data.par_chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
                }
                #[cfg(not(feature = "parallel"))]
                {
                    data.chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
                }
            }
        }
    }

    /// Parallelism handed to the dense factorization.
    pub fn faer_par(self) -> faer::Par {
        match self {
            Exec::Sequential => faer::Par::Seq,
            Exec::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    faer::Par::rayon(0)
                }
                #[cfg(not(feature = "parallel"))]
                {
                    faer::Par::Seq
                }
            }
        }
    }
}
