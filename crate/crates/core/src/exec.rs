//! Data-parallel map with a sequential fallback.
//!
//! Every sweep in the crate (Floquet exponents, resolvent samples, scan
//! cells, random initial data, optimizer restarts) goes through
//! [`Exec::map`], which preserves input order so results do not depend on
//! scheduling. Without the `parallel` feature only [`Exec::Sequential`]
//! exists.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    #[default]
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Exec {
    /// Parallel when compiled with the `parallel` feature, sequential otherwise.
    pub fn best() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }

    /// `jobs == 1` selects the sequential path.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            Exec::Sequential
        } else {
            Self::best()
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
        }
    }
}

/// Run `f` inside a rayon pool of `jobs` threads (or directly when the
/// feature is off or `jobs` is zero, meaning "use the global pool").
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if jobs > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}
