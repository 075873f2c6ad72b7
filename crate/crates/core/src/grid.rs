//! Uniform periodic grids on the torus [0, 2π)^d.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the periodic box.
pub const EXTENT: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    /// Builds a `dim`-dimensional grid with `n` points per axis.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension { dim });
        }
        if !n.is_power_of_two() {
            return Err(Error::NonPowerOfTwo { n });
        }
        if n < 8 {
            return Err(Error::GridTooSmall { n });
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        EXTENT
    }

    pub fn spacing(&self) -> f64 {
        EXTENT / self.n as f64
    }

    /// h^d
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of grid points, n^d.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of lines along the last (fastest) axis.
    pub(crate) fn lines(&self) -> usize {
        self.n.pow(self.dim as u32 - 1)
    }

    /// Multi-index of a flat (row-major, last axis fastest) index. Unused
    /// trailing axes are zero.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Physical coordinates of a flat index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        let idx = self.unflatten(flat);
        [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h]
    }

    /// Coordinates of every node, flattened.
    pub fn all_coords(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.coords(i)).collect()
    }

    /// Flat index of the node at `x`, if `x` lies on a node (periodically).
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let h = self.spacing();
        let mut idx = [0usize; 3];
        for (axis, &xi) in x.iter().enumerate() {
            let s = xi / h;
            let r = s.round();
            if (s - r).abs() > 1e-9 || !s.is_finite() {
                return None;
            }
            idx[axis] = (r as i64).rem_euclid(self.n as i64) as usize;
        }
        Some(self.flatten(&idx))
    }

    /// Flat index of `x - z` for a flat node `x` and integer offset `z`.
    pub fn shifted(&self, flat: usize, z: &[i32; 3]) -> usize {
        let idx = self.unflatten(flat);
        let n = self.n as i64;
        let mut out = [0usize; 3];
        for axis in 0..self.dim {
            out[axis] = (idx[axis] as i64 - z[axis] as i64).rem_euclid(n) as usize;
        }
        self.flatten(&out)
    }

    /// For the line `line` (all axes but the last fixed) and offset `z`,
    /// returns the source line of `x - z` and the periodic shift along the
    /// last axis.
    pub(crate) fn line_shift(&self, line: usize, z: &[i32; 3]) -> (usize, usize) {
        let n = self.n as i64;
        let last = self.dim - 1;
        let mut src_line = 0usize;
        let mut rem = line;
        let mut stride = 1usize;
        for axis in (0..last).rev() {
            let i = (rem % self.n) as i64;
            rem /= self.n;
            let j = (i - z[axis] as i64).rem_euclid(n) as usize;
            src_line += j * stride;
            stride *= self.n;
        }
        let shift = (z[last] as i64).rem_euclid(n) as usize;
        (src_line, shift)
    }
}

/// `make_grid(dim, n)`.
pub fn make_grid(dim: usize, n: usize) -> Result<Grid> {
    Grid::new(dim, n)
}
