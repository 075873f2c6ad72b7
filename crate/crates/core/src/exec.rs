//! Execution policy for the data-parallel kernels.
//!
//! Every kernel splits its work into a fixed, input-determined list of tasks
//! (grid lines, snapshots, rungs) and gathers the partial results in task
//! order before a pairwise reduction. The numerical result is therefore the
//! same bit pattern whether the tasks ran on one thread or many.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

/// Selects the execution mode at runtime. `Parallel` is a no-op when the
/// crate was built without the `parallel` feature.
pub fn set_mode(mode: Mode) {
    FORCE_SEQUENTIAL.store(mode == Mode::Sequential, Ordering::SeqCst);
}

pub fn mode() -> Mode {
    if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst) {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

/// Evaluates `f(0..len)` and returns the results in index order.
pub(crate) fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode() == Mode::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    (0..len).map(f).collect()
}

/// Pairwise (cascade) summation; the split points depend only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub(crate) fn pairwise_sum_arrays<const K: usize>(values: &[[f64; K]]) -> [f64; K] {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut acc = [0.0; K];
        for v in values {
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b;
            }
        }
        return acc;
    }
    let mid = values.len() / 2;
    let lo = pairwise_sum_arrays(&values[..mid]);
    let hi = pairwise_sum_arrays(&values[mid..]);
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = lo[k] + hi[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        let arrs: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, 1.0]).collect();
        assert_eq!(pairwise_sum_arrays(&arrs), [4950.0, 100.0]);
    }

    #[test]
    fn map_range_preserves_order() {
        let out = map_range(257, |i| i * 3);
        assert!(out.iter().enumerate().all(|(i, &v)| v == 3 * i));
    }
}
