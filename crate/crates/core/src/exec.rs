//! Batch execution: rayon data parallelism when the `parallel` feature is
//! on, a plain loop otherwise. Output order always follows input order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `items`. Falls back to sequential when built without
    /// the `parallel` feature.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Runs `job` on a dedicated pool of `threads` workers, or on the
    /// current thread for sequential execution.
    pub fn install<R: Send>(self, threads: Option<usize>, job: impl FnOnce() -> R + Send) -> R {
        match (self, threads) {
            #[cfg(feature = "parallel")]
            (Execution::Parallel, Some(n)) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(job),
                Err(_) => job(),
            },
            _ => job(),
        }
    }
}
