//! Execution policy for the data-parallel loops.
//!
//! Every hot loop in the crate (per-node quadratures, per-circle field
//! evaluation) goes through [`map_indexed`]. With the `parallel` feature the
//! loop runs on the rayon pool when [`Execution::Parallel`] is requested;
//! without it, or with [`Execution::Sequential`], it is a plain iterator.
//! Results are collected in index order and no floating-point reduction is
//! split across threads, so both policies produce bit-identical output.

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

/// `(0..len).map(f).collect()`, possibly on the rayon pool.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = exec;
    (0..len).map(f).collect()
}
