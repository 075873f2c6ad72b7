//! Velocity/pressure samples on a periodic grid and the exact or synthetic
//! field generators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::{self, Transform};

/// One realization: a time series of velocity snapshots with optional
/// pressure. Velocity is stored snapshot-major, then component, then grid
/// index; pressure snapshot-major, then grid index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    times: Vec<f64>,
    velocity: Vec<f64>,
    pressure: Option<Vec<f64>>,
}

/// Borrowed view of one snapshot, used by the two-point kernels.
#[derive(Clone, Copy)]
pub(crate) struct Snap<'a> {
    pub v: [&'a [f64]; 3],
    pub p: Option<&'a [f64]>,
}

impl GridField {
    pub fn new(
        grid: Grid,
        times: Vec<f64>,
        velocity: Vec<f64>,
        pressure: Option<Vec<f64>>,
    ) -> Result<Self> {
        validate_times(&times)?;
        let expect = times.len() * grid.dim() * grid.len();
        if velocity.len() != expect {
            return Err(Error::InvalidArgument(format!(
                "velocity has {} samples, expected {expect}",
                velocity.len()
            )));
        }
        if let Some(p) = &pressure {
            if p.len() != times.len() * grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "pressure has {} samples, expected {}",
                    p.len(),
                    times.len() * grid.len()
                )));
            }
        }
        let field = Self {
            grid,
            times,
            velocity,
            pressure,
        };
        field.check_finite()?;
        Ok(field)
    }

    /// Repeats snapshot 0 of a steady field at the given instants.
    pub fn steady(&self, times: Vec<f64>) -> Result<Self> {
        let len = self.grid.dim() * self.grid.len();
        let velocity = self.velocity[..len].repeat(times.len());
        let pressure = self
            .pressure
            .as_ref()
            .map(|p| p[..self.grid.len()].repeat(times.len()));
        Self::new(self.grid, times, velocity, pressure)
    }

    /// Attaches the pressure recovered from the velocity by the Poisson solve.
    pub fn with_solved_pressure(mut self) -> Result<Self> {
        self.pressure = Some(spectral::solve_pressure(&self)?);
        Ok(self)
    }

    pub fn without_pressure(mut self) -> Self {
        self.pressure = None;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn has_pressure(&self) -> bool {
        self.pressure.is_some()
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn pressure_all(&self) -> Option<&[f64]> {
        self.pressure.as_deref()
    }

    pub fn component(&self, snapshot: usize, c: usize) -> &[f64] {
        let len = self.grid.len();
        let start = (snapshot * self.grid.dim() + c) * len;
        &self.velocity[start..start + len]
    }

    pub fn component_mut(&mut self, snapshot: usize, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        let start = (snapshot * self.grid.dim() + c) * len;
        &mut self.velocity[start..start + len]
    }

    pub fn pressure(&self, snapshot: usize) -> Option<&[f64]> {
        let len = self.grid.len();
        self.pressure
            .as_ref()
            .map(|p| &p[snapshot * len..(snapshot + 1) * len])
    }

    pub fn pressure_mut(&mut self, snapshot: usize) -> Option<&mut [f64]> {
        let len = self.grid.len();
        self.pressure
            .as_mut()
            .map(|p| &mut p[snapshot * len..(snapshot + 1) * len])
    }

    /// Time interval the samples represent: `[t₀, t_{S-1}]`, or `[t₀, t₀ + 1]`
    /// for a single frozen snapshot.
    pub fn time_span(&self) -> (f64, f64) {
        span_of(&self.times)
    }

    pub(crate) fn snap(&self, snapshot: usize) -> Snap<'_> {
        let empty: &[f64] = &[];
        let mut v = [empty; 3];
        for (c, slot) in v.iter_mut().enumerate().take(self.grid.dim()) {
            *slot = self.component(snapshot, c);
        }
        Snap {
            v,
            p: self.pressure(snapshot),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        let finite = self.velocity.iter().all(|v| v.is_finite())
            && self
                .pressure
                .as_ref()
                .is_none_or(|p| p.iter().all(|v| v.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }
}

pub(crate) fn span_of(times: &[f64]) -> (f64, f64) {
    if times.len() == 1 {
        (times[0], times[0] + 1.0)
    } else {
        (times[0], times[times.len() - 1])
    }
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("field has no snapshots".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes);
    }
    Ok(())
}

/// Taylor–Green vortex `v = (sin x cos y, -cos x sin y)` with its pressure
/// `p = (cos 2x + cos 2y)/4`, a steady solution of the 2D Euler equations.
pub fn taylor_green(grid: Grid) -> Result<GridField> {
    require_2d("taylor_green", &grid)?;
    let coords = grid.all_coords();
    let mut velocity: Vec<f64> = coords.iter().map(|x| x[0].sin() * x[1].cos()).collect();
    velocity.extend(coords.iter().map(|x| -x[0].cos() * x[1].sin()));
    let pressure = coords
        .iter()
        .map(|x| ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0)
        .collect();
    GridField::new(grid, vec![0.0], velocity, Some(pressure))
}

/// Shear flow `v = (f(y), 0)`, `p = 0`, with `f(y) = Σ_j a_j cos(j y)` and
/// `profile_modes[j] = a_j`.
pub fn shear_flow(grid: Grid, profile_modes: &[f64]) -> Result<GridField> {
    require_2d("shear_flow", &grid)?;
    let coords = grid.all_coords();
    let f = |y: f64| -> f64 {
        profile_modes
            .iter()
            .enumerate()
            .map(|(j, a)| a * (j as f64 * y).cos())
            .sum()
    };
    let mut velocity: Vec<f64> = coords.iter().map(|x| f(x[1])).collect();
    velocity.extend(std::iter::repeat_n(0.0, grid.len()));
    GridField::new(grid, vec![0.0], velocity, Some(vec![0.0; grid.len()]))
}

fn require_2d(what: &'static str, grid: &Grid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::WrongDimension {
            what,
            expected: 2,
            found: grid.dim(),
        });
    }
    Ok(())
}

/// Parameters of a band-limited random-phase power-law field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovBand {
    pub alpha: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl BesovBand {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange { alpha: self.alpha });
        }
        if self.k_min >= self.k_max {
            return Err(Error::EmptyBand {
                k_min: self.k_min,
                k_max: self.k_max,
            });
        }
        if self.k_min < 1.0 || self.k_max > grid.n() as f64 / 3.0 {
            return Err(Error::BandOutOfRange {
                k_min: self.k_min,
                k_max: self.k_max,
                n: grid.n(),
            });
        }
        if grid.dim() < 2 {
            return Err(Error::InvalidArgument(
                "a non-constant divergence-free field needs d >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Random divergence-free field with `|v̂(k)| = |k|^{-(alpha + d/2)}` on
/// `k_min <= |k| <= k_max` and uniformly random phases (stream 0 of `seed`).
pub fn random_besov_field(
    grid: Grid,
    alpha: f64,
    seed: u64,
    k_min: f64,
    k_max: f64,
) -> Result<GridField> {
    random_besov_member(
        grid,
        BesovBand {
            alpha,
            k_min,
            k_max,
        },
        seed,
        0,
    )
}

/// Member `stream` of a seeded family. The generator is ChaCha8 seeded with
/// `seed`, one independent stream per member; modes are visited in flat
/// index order and each canonical mode `k` (first nonzero component
/// positive) draws `d` uniform phases.
pub fn random_besov_member(
    grid: Grid,
    band: BesovBand,
    seed: u64,
    stream: u64,
) -> Result<GridField> {
    band.validate(&grid)?;
    let dim = grid.dim();
    let len = grid.len();
    let t = Transform::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = vec![vec![zero; len]; dim];
    let exponent = -(band.alpha + dim as f64 / 2.0);
    let n = grid.n();
    for flat in 0..len {
        let k = t.wavevector(flat);
        let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
        let kabs = k2.sqrt();
        if kabs < band.k_min || kabs > band.k_max || !is_canonical(&k[..dim]) {
            continue;
        }
        let mut u = [zero; 3];
        for slot in u.iter_mut().take(dim) {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            *slot = Complex64::from_polar(1.0, phase);
        }
        let ku: Complex64 = (0..dim).map(|c| u[c] * k[c]).sum();
        for c in 0..dim {
            u[c] -= ku * (k[c] / k2);
        }
        let norm = (0..dim).map(|c| u[c].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let scale = kabs.powf(exponent) / norm;
        // mirror index of -k
        let idx = grid.unflatten(flat);
        let mut mirror = [0usize; 3];
        for axis in 0..dim {
            mirror[axis] = (n - idx[axis]) % n;
        }
        let mflat = grid.flatten(&mirror);
        for c in 0..dim {
            coeffs[c][flat] = u[c] * scale;
            coeffs[c][mflat] = (u[c] * scale).conj();
        }
    }
    let mut velocity = Vec::with_capacity(dim * len);
    for c in coeffs {
        velocity.extend(t.inverse_real(&c));
    }
    GridField::new(grid, vec![0.0], velocity, None)
}

fn is_canonical(k: &[f64]) -> bool {
    k.iter().find(|&&x| x != 0.0).is_some_and(|&x| x > 0.0)
}

/// `members` independent draws sharing `seed`, one generator stream each.
pub fn random_besov_members(
    grid: Grid,
    band: BesovBand,
    seed: u64,
    members: usize,
) -> Result<Vec<GridField>> {
    (0..members as u64)
        .map(|m| random_besov_member(grid, band, seed, m))
        .collect()
}
