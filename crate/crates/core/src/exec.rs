//! Serial / data-parallel execution switch.
//!
//! Every parallel loop in the crate goes through [`map_indexed`] or
//! [`fold_chunks`], so output never depends on the schedule. Without the
//! `parallel` feature, [`Execution::Parallel`] runs serially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Serial
        }
    }
}

impl Execution {
    /// Whether work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f)`, in index order regardless of execution mode.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Folds `items` into per-chunk accumulators and merges them.
///
/// `merge` must be associative and commutative for the result to be
/// schedule-independent (integer counting is).
pub fn fold_chunks<I, A, Init, Fold, Merge>(
    items: &[I],
    exec: Execution,
    init: Init,
    fold: Fold,
    merge: Merge,
) -> A
where
    I: Sync,
    A: Send,
    Init: Fn() -> A + Sync + Send,
    Fold: Fn(A, &I) -> A + Sync + Send,
    Merge: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items
            .par_iter()
            .fold(&init, &fold)
            .reduce(&init, &merge);
    }
    let _ = (exec, &merge);
    items.iter().fold(init(), fold)
}
