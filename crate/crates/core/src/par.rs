//! Index-ordered map with an optional rayon backend.

use crate::solver::Execution;

/// `(0..count).map(f)`, computed in parallel when requested and available.
/// The output order is always the index order.
pub fn map_indices<T, F>(count: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}
