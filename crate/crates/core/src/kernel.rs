//! Two-point sums `Σ_x Σ_z f(x, x - z)` over a stencil of offsets.
//!
//! Work is split by grid lines along the last axis; inside a line the shift
//! `x - z` is a rotation, so the inner loop is a contiguous sweep.

use crate::exec::{map_range, pairwise_sum_arrays};
use crate::grid::Grid;

/// Calls `f(x, y, zi)` for every node `x`, every offset index `zi` and
/// `y = x - offsets[zi]`, and returns the sum of the returned vectors.
pub(crate) fn pair_reduce<const K: usize, F>(grid: &Grid, offsets: &[[i32; 3]], f: F) -> [f64; K]
where
    F: Fn(usize, usize, usize) -> [f64; K] + Sync + Send,
{
    let n = grid.n();
    let per_line = map_range(grid.lines(), |line| {
        let mut acc = [0.0; K];
        for (zi, z) in offsets.iter().enumerate() {
            let (src, s) = grid.line_shift(line, z);
            let bx = line * n;
            let by = src * n;
            for j in 0..n {
                let jy = if j >= s { j - s } else { j + n - s };
                let r = f(bx + j, by + jy, zi);
                for k in 0..K {
                    acc[k] += r[k];
                }
            }
        }
        acc
    });
    pairwise_sum_arrays(&per_line)
}

/// Per-node variant: returns `Σ_z f(x, x - z, zi)` for every node `x`.
pub(crate) fn pair_map<const K: usize, F>(grid: &Grid, offsets: &[[i32; 3]], f: F) -> Vec<[f64; K]>
where
    F: Fn(usize, usize, usize) -> [f64; K] + Sync + Send,
{
    let n = grid.n();
    let per_line = map_range(grid.lines(), |line| {
        let mut acc = vec![[0.0; K]; n];
        for (zi, z) in offsets.iter().enumerate() {
            let (src, s) = grid.line_shift(line, z);
            let bx = line * n;
            let by = src * n;
            for (j, slot) in acc.iter_mut().enumerate() {
                let jy = if j >= s { j - s } else { j + n - s };
                let r = f(bx + j, by + jy, zi);
                for k in 0..K {
                    slot[k] += r[k];
                }
            }
        }
        acc
    });
    per_line.into_iter().flatten().collect()
}

/// Integer offsets `z` with `|z| h < radius`, lexicographic order.
pub fn ball_offsets(grid: &Grid, radius: f64) -> Vec<[i32; 3]> {
    let h = grid.spacing();
    let r = (radius / h).ceil() as i32;
    let lim = (radius / h) * (radius / h);
    let mut out = Vec::new();
    let range = |axis: usize| if axis < grid.dim() { -r..=r } else { 0..=0 };
    for a in range(0) {
        for b in range(1) {
            for c in range(2) {
                let z2 = (a * a + b * b + c * c) as f64;
                if z2 < lim {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}
