//! Fourier-space operators on periodic grids.
//!
//! Coefficients are normalized so that `f(x) = Σ_k f̂(k) e^{ik·x}`; the
//! forward transform divides by the number of grid points.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::grid::Grid;

pub(crate) struct Transform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transform {
    pub(crate) fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let dim = self.grid.dim();
        let mut lane = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, c) in lane.iter_mut().enumerate() {
                        *c = data[start + j * stride];
                    }
                    plan.process(&mut lane);
                    for (j, c) in lane.iter().enumerate() {
                        data[start + j * stride] = *c;
                    }
                }
            }
        }
    }

    /// Real samples to normalized Fourier coefficients.
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut data, &self.forward);
        let scale = 1.0 / values.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    /// Fourier coefficients to real samples (imaginary round-off dropped).
    pub(crate) fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.run(&mut data, &self.inverse);
        data.iter().map(|c| c.re).collect()
    }

    /// Integer wavevector of a flat spectral index; the Nyquist index maps to -n/2.
    pub(crate) fn wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.grid.unflatten(flat);
        let n = self.grid.n();
        let mut k = [0.0; 3];
        for axis in 0..self.grid.dim() {
            k[axis] = signed_index(idx[axis], n) as f64;
        }
        k
    }
}

pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn project_in_place(t: &Transform, comps: &mut [Vec<Complex64>]) {
    let dim = comps.len();
    for flat in 0..comps[0].len() {
        let k = t.wavevector(flat);
        let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            continue;
        }
        let mut kv = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            kv += comps[c][flat] * k[c];
        }
        for c in 0..dim {
            comps[c][flat] -= kv * (k[c] / k2);
        }
    }
}

/// Applies the Leray projector `I - k kᵀ/|k|²` to every velocity snapshot.
/// The mean (zero) mode is left untouched; pressure is carried over unchanged.
pub fn leray_project(field: &GridField) -> Result<GridField> {
    field.check_finite()?;
    let grid = *field.grid();
    let t = Transform::new(grid);
    let mut out = field.clone();
    for s in 0..field.snapshots() {
        let mut comps: Vec<Vec<Complex64>> = (0..grid.dim())
            .map(|c| t.forward_real(field.component(s, c)))
            .collect();
        project_in_place(&t, &mut comps);
        for (c, coeffs) in comps.iter().enumerate() {
            let values = t.inverse_real(coeffs);
            out.component_mut(s, c).copy_from_slice(&values);
        }
    }
    Ok(out)
}

/// Largest `|k·v̂(k)|` over all snapshots and modes, relative to the largest
/// velocity coefficient magnitude. Zero for an identically zero field.
pub fn spectral_divergence(field: &GridField) -> f64 {
    let grid = *field.grid();
    let t = Transform::new(grid);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in 0..field.snapshots() {
        let comps: Vec<Vec<Complex64>> = (0..grid.dim())
            .map(|c| t.forward_real(field.component(s, c)))
            .collect();
        for flat in 0..grid.len() {
            let k = t.wavevector(flat);
            let mut kv = Complex64::new(0.0, 0.0);
            for c in 0..grid.dim() {
                kv += comps[c][flat] * k[c];
                scale = scale.max(comps[c][flat].norm());
            }
            worst = worst.max(kv.norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Solves `-Δp = Σ_{k,l} ∂_k ∂_l (v^k v^l)` spectrally with the zero-mean
/// gauge, for every snapshot. Returns `S × n^d` samples.
pub fn solve_pressure(field: &GridField) -> Result<Vec<f64>> {
    field.check_finite()?;
    let grid = *field.grid();
    let dim = grid.dim();
    let t = Transform::new(grid);
    let len = grid.len();
    let mut out = Vec::with_capacity(field.snapshots() * len);
    for s in 0..field.snapshots() {
        let mut p_hat = vec![Complex64::new(0.0, 0.0); len];
        for a in 0..dim {
            for b in a..dim {
                let va = field.component(s, a);
                let vb = field.component(s, b);
                let product: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x * y).collect();
                let q_hat = t.forward_real(&product);
                let mult = if a == b { 1.0 } else { 2.0 };
                for flat in 0..len {
                    let k = t.wavevector(flat);
                    p_hat[flat] -= q_hat[flat] * (mult * k[a] * k[b]);
                }
            }
        }
        for (flat, c) in p_hat.iter_mut().enumerate() {
            let k = t.wavevector(flat);
            let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= k2;
            }
        }
        out.extend(t.inverse_real(&p_hat));
    }
    Ok(out)
}

/// Leray-projected copy keeping only modes with every `|k_i| < cutoff`.
/// Pressure, if present, is truncated the same way.
pub fn truncated_copy(field: &GridField, cutoff: usize) -> Result<GridField> {
    field.check_finite()?;
    let grid = *field.grid();
    let t = Transform::new(grid);
    let keep = |flat: usize| {
        let k = t.wavevector(flat);
        k[..grid.dim()].iter().all(|x| x.abs() < cutoff as f64)
    };
    let mut out = field.clone();
    for s in 0..field.snapshots() {
        let mut comps: Vec<Vec<Complex64>> = (0..grid.dim())
            .map(|c| t.forward_real(field.component(s, c)))
            .collect();
        project_in_place(&t, &mut comps);
        for (c, coeffs) in comps.iter_mut().enumerate() {
            for (flat, v) in coeffs.iter_mut().enumerate() {
                if !keep(flat) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            let values = t.inverse_real(coeffs);
            out.component_mut(s, c).copy_from_slice(&values);
        }
        if let Some(p) = field.pressure(s) {
            let mut coeffs = t.forward_real(p);
            for (flat, v) in coeffs.iter_mut().enumerate() {
                if !keep(flat) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            let values = t.inverse_real(&coeffs);
            out.pressure_mut(s).unwrap().copy_from_slice(&values);
        }
    }
    Ok(out)
}

/// Trigonometric interpolation onto a grid `factor` times finer per axis.
/// A Nyquist coefficient is split evenly between `±n/2` so the result stays real.
pub fn refine(field: &GridField, factor: usize) -> Result<GridField> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "refinement factor {factor} must be a power of two"
        )));
    }
    field.check_finite()?;
    let coarse = *field.grid();
    let fine = Grid::new(coarse.dim(), coarse.n() * factor)?;
    let tc = Transform::new(coarse);
    let tf = Transform::new(fine);
    let n = coarse.n();
    let nf = fine.n();
    let targets = |j: usize| -> Vec<(usize, f64)> {
        if factor == 1 {
            vec![(j, 1.0)]
        } else if j < n / 2 {
            vec![(j, 1.0)]
        } else if j > n / 2 {
            vec![(j + nf - n, 1.0)]
        } else {
            vec![(n / 2, 0.5), (nf - n / 2, 0.5)]
        }
    };
    let lift = |coeffs: &[Complex64]| -> Vec<f64> {
        let mut big = vec![Complex64::new(0.0, 0.0); fine.len()];
        for (flat, &c) in coeffs.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = coarse.unflatten(flat);
            let mut dests: Vec<([usize; 3], f64)> = vec![([0; 3], 1.0)];
            for axis in 0..coarse.dim() {
                let mut next = Vec::with_capacity(dests.len() * 2);
                for (d, w) in &dests {
                    for (t, f) in targets(idx[axis]) {
                        let mut nd = *d;
                        nd[axis] = t;
                        next.push((nd, w * f));
                    }
                }
                dests = next;
            }
            for (d, w) in dests {
                big[fine.flatten(&d)] += c * w;
            }
        }
        tf.inverse_real(&big)
    };
    let snapshots = field.snapshots();
    let mut velocity = Vec::with_capacity(snapshots * coarse.dim() * fine.len());
    let mut pressure = field.has_pressure().then(Vec::new);
    for s in 0..snapshots {
        for c in 0..coarse.dim() {
            velocity.extend(lift(&tc.forward_real(field.component(s, c))));
        }
        if let (Some(p), Some(out)) = (field.pressure(s), pressure.as_mut()) {
            out.extend(lift(&tc.forward_real(p)));
        }
    }
    GridField::new(fine, field.times().to_vec(), velocity, pressure)
}
