//! Discrete mollifiers `ρ_ε(z) = ε^{-d} ρ(z/ε)` on the grid offsets and
//! periodic convolution with them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, pairwise_sum};
use crate::grid::{Grid, EXTENT};
use crate::kernel::ball_offsets;

/// Radial profile `f(r²)` on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `exp(-1/(1 - r²))`
    Bump,
    /// `(1 - r²)²`
    QuarticSpline,
}

impl Profile {
    fn eval(self, r2: f64) -> f64 {
        if r2 >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::Bump => (-1.0 / (1.0 - r2)).exp(),
            Profile::QuarticSpline => (1.0 - r2) * (1.0 - r2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Bump => "bump",
            Profile::QuarticSpline => "quartic-spline",
        }
    }
}

/// Eighth-order central-difference weights for the first derivative.
const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const FD_REACH: i32 = FD8.len() as i32;

/// A sampled, renormalized mollifier. `offsets` covers the support of both
/// `rho` (the open ball of radius ε) and of the gradient, which is the
/// eighth-order central difference of the sampled kernel and reaches four
/// grid points further.
#[derive(Clone, Debug)]
pub struct Mollifier {
    grid: Grid,
    eps: f64,
    profile: Profile,
    offsets: Vec<[i32; 3]>,
    rho: Vec<f64>,
    grad: Vec<[f64; 3]>,
    grad_l1: f64,
    grad_max: f64,
}

impl Mollifier {
    pub fn new(grid: Grid, eps: f64) -> Result<Self> {
        Self::with_profile(grid, eps, Profile::Bump)
    }

    pub fn with_profile(grid: Grid, eps: f64, profile: Profile) -> Result<Self> {
        let h = grid.spacing();
        let min = 3.0 * h;
        if !eps.is_finite() || eps < min * (1.0 - 1e-12) {
            return Err(Error::UnderResolved { eps, min });
        }
        let max = EXTENT / 4.0;
        if eps > max * (1.0 + 1e-12) {
            return Err(Error::TooWide { eps, max });
        }
        let scale = (h / eps) * (h / eps);
        let raw = |z: &[i32; 3]| {
            let z2 = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) as f64;
            profile.eval(z2 * scale)
        };
        let offsets = ball_offsets(&grid, eps + FD_REACH as f64 * h);
        let raw_rho: Vec<f64> = offsets.iter().map(raw).collect();
        let vol = grid.cell_volume();
        let mass = pairwise_sum(&raw_rho) * vol;
        let norm = 1.0 / mass;
        let rho: Vec<f64> = raw_rho.iter().map(|r| r * norm).collect();
        let dim = grid.dim();
        let grad: Vec<[f64; 3]> = offsets
            .iter()
            .map(|z| {
                let mut g = [0.0; 3];
                for (axis, slot) in g.iter_mut().enumerate().take(dim) {
                    let mut acc = 0.0;
                    for (k, c) in FD8.iter().enumerate() {
                        let mut up = *z;
                        let mut down = *z;
                        up[axis] += k as i32 + 1;
                        down[axis] -= k as i32 + 1;
                        acc += c * (raw(&up) - raw(&down));
                    }
                    *slot = acc * norm / h;
                }
                g
            })
            .collect();
        let norms: Vec<f64> = grad
            .iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
            .collect();
        let grad_l1 = pairwise_sum(&norms) * vol;
        let grad_max = norms.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            grid,
            eps,
            profile,
            offsets,
            rho,
            grad,
            grad_l1,
            grad_max,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn offsets(&self) -> &[[i32; 3]] {
        &self.offsets
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn grad_rho(&self) -> &[[f64; 3]] {
        &self.grad
    }

    /// `Σ |∇ρ_ε| h^d`.
    pub fn grad_l1(&self) -> f64 {
        self.grad_l1
    }

    /// `C_ε = ε Σ |∇ρ_ε| h^d`, constant along an ε ladder.
    pub fn scaling_constant(&self) -> f64 {
        self.eps * self.grad_l1
    }

    /// Radius of the open ball containing the gradient stencil.
    pub fn support_radius(&self) -> f64 {
        self.eps + FD_REACH as f64 * self.grid.spacing()
    }

    /// Constant `C` of the bound `|E_ε(ψ)| ≤ (C ‖ψ‖∞ / ε) · d³`, where `d³`
    /// is the ball-averaged cubic increment over the ball of
    /// [`Self::support_radius`]: `C = ε max|∇ρ_ε| N h^d / 2`, `N` the number
    /// of offsets in that ball.
    pub fn bound_constant(&self) -> f64 {
        0.5 * self.eps * self.grad_max * self.offsets.len() as f64 * self.grid.cell_volume()
    }

    /// Offsets with a nonzero kernel weight.
    pub(crate) fn rho_support(&self) -> (Vec<[i32; 3]>, Vec<f64>) {
        self.offsets
            .iter()
            .zip(&self.rho)
            .filter(|(_, &r)| r != 0.0)
            .map(|(z, &r)| (*z, r))
            .unzip()
    }
}

/// Periodic convolution `(ρ_ε * f)(x) = Σ_z ρ_ε(z) f(x - z) h^d`.
pub fn mollify(values: &[f64], grid: &Grid, mollifier: &Mollifier) -> Result<Vec<f64>> {
    if grid != mollifier.grid() {
        return Err(Error::GridMismatch(format!(
            "field grid {grid:?} vs mollifier grid {:?}",
            mollifier.grid()
        )));
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples on a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let (offsets, weights) = mollifier.rho_support();
    let vol = grid.cell_volume();
    let n = grid.n();
    let lines = map_range(grid.lines(), |line| {
        let mut out = vec![0.0; n];
        for (z, w) in offsets.iter().zip(&weights) {
            let (src, s) = grid.line_shift(line, z);
            let row = &values[src * n..(src + 1) * n];
            for (j, slot) in out.iter_mut().enumerate() {
                let jy = if j >= s { j - s } else { j + n - s };
                *slot += w * row[jy];
            }
        }
        out.iter_mut().for_each(|v| *v *= vol);
        out
    });
    Ok(lines.into_iter().flatten().collect())
}
