//! Smooth space-time test functions `ψ(t, x) = θ(t) χ(x)` with a compactly
//! supported bump θ and a trigonometric mode χ.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::span_of;
use crate::grid::Grid;

/// `θ(t) = e · exp(-1/(1 - s²))` with `s` the affine image of `t` in (-1, 1);
/// the peak value is 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBump {
    pub start: f64,
    pub end: f64,
}

impl TimeBump {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidArgument(format!(
                "empty time support ({start}, {end})"
            )));
        }
        Ok(Self { start, end })
    }

    fn local(&self, t: f64) -> f64 {
        (2.0 * t - (self.start + self.end)) / (self.end - self.start)
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = self.local(t);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        E * (-1.0 / (1.0 - s * s)).exp()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = self.local(t);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        let ds = 2.0 / (self.end - self.start);
        self.value(t) * (-2.0 * s / (q * q)) * ds
    }

    /// `∫ θ dt`, by the trapezoid rule on a fine grid (spectrally accurate
    /// for a smooth compactly supported integrand).
    pub fn integral(&self) -> f64 {
        const STEPS: usize = 4096;
        let dt = (self.end - self.start) / STEPS as f64;
        let inner: f64 = (1..STEPS)
            .map(|k| self.value(self.start + k as f64 * dt))
            .sum();
        inner * dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// `χ(x) = cos(m·x)` or `sin(m·x)`; `m = 0` with `Cos` is the constant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialMode {
    pub kind: Trig,
    pub m: [i32; 3],
}

impl SpatialMode {
    pub fn constant() -> Self {
        Self {
            kind: Trig::Cos,
            m: [0; 3],
        }
    }

    pub fn cos(m: [i32; 3]) -> Self {
        Self { kind: Trig::Cos, m }
    }

    pub fn sin(m: [i32; 3]) -> Self {
        Self { kind: Trig::Sin, m }
    }

    /// Parses `m0`, `cos:1,2` or `sin:0,1,1`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "m0" || s == "const" {
            return Ok(Self::constant());
        }
        let bad = || Error::InvalidArgument(format!("unrecognised test-function mode '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind {
            "cos" => Trig::Cos,
            "sin" => Trig::Sin,
            _ => return Err(bad()),
        };
        let mut m = [0i32; 3];
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.is_empty() || parts.len() > 3 {
            return Err(bad());
        }
        for (slot, p) in m.iter_mut().zip(&parts) {
            *slot = p.trim().parse().map_err(|_| bad())?;
        }
        Ok(Self { kind, m })
    }

    pub fn label(&self) -> String {
        if self.m == [0; 3] && self.kind == Trig::Cos {
            return "m0".into();
        }
        let kind = match self.kind {
            Trig::Cos => "cos",
            Trig::Sin => "sin",
        };
        format!("{kind}:{},{},{}", self.m[0], self.m[1], self.m[2])
    }

    fn phase(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.m).map(|(xi, &mi)| mi as f64 * xi).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            Trig::Cos => self.phase(x).cos(),
            Trig::Sin => self.phase(x).sin(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let d = match self.kind {
            Trig::Cos => -self.phase(x).sin(),
            Trig::Sin => self.phase(x).cos(),
        };
        [
            d * self.m[0] as f64,
            d * self.m[1] as f64,
            d * self.m[2] as f64,
        ]
    }

    /// Values on every grid node.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let d = grid.dim();
        (0..grid.len())
            .map(|i| self.value(&grid.coords(i)[..d]))
            .collect()
    }

    /// Gradient on every grid node, component-major (`d × n^d`).
    pub fn sample_gradient(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let d = grid.dim();
        let grads: Vec<[f64; 3]> = (0..grid.len())
            .map(|i| self.gradient(&grid.coords(i)[..d]))
            .collect();
        (0..d)
            .map(|c| grads.iter().map(|g| g[c]).collect())
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `ψ(t, x) = θ(t) χ(x)`. `time = None` means the bump fills the data span.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub time: Option<TimeBump>,
    pub space: SpatialMode,
}

/// Per-snapshot quadrature weights of a test function against sampled data.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeWeights {
    /// `τ_s θ(t_s)`, or `∫θ` for a frozen snapshot.
    pub value: Vec<f64>,
    /// `τ_s θ'(t_s)`, or 0 for a frozen snapshot.
    pub derivative: Vec<f64>,
    /// Plain trapezoid weights `τ_s`.
    pub trapezoid: Vec<f64>,
}

impl TestFunction {
    pub fn new(time: Option<TimeBump>, space: SpatialMode) -> Self {
        Self { time, space }
    }

    /// Spatial mode with the bump filling the data span.
    pub fn spatial(space: SpatialMode) -> Self {
        Self { time: None, space }
    }

    pub fn bump_for(&self, times: &[f64]) -> TimeBump {
        self.time.unwrap_or_else(|| {
            let (a, b) = span_of(times);
            TimeBump { start: a, end: b }
        })
    }

    pub fn value(&self, bump: &TimeBump, t: f64, x: &[f64]) -> f64 {
        bump.value(t) * self.space.value(x)
    }

    pub fn time_derivative(&self, bump: &TimeBump, t: f64, x: &[f64]) -> f64 {
        bump.derivative(t) * self.space.value(x)
    }

    pub fn gradient(&self, bump: &TimeBump, t: f64, x: &[f64]) -> [f64; 3] {
        let th = bump.value(t);
        self.space.gradient(x).map(|g| g * th)
    }

    pub fn sup_norm(&self) -> f64 {
        self.space.sup_norm()
    }

    /// Quadrature weights against the snapshot ladder `times`. The bump
    /// support must lie inside the data span.
    pub fn time_weights(&self, times: &[f64]) -> Result<TimeWeights> {
        let bump = self.bump_for(times);
        let (a, b) = span_of(times);
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if bump.start < a - tol || bump.end > b + tol {
            return Err(Error::SupportOutsideData {
                start: bump.start,
                end: bump.end,
                data_start: a,
                data_end: b,
            });
        }
        if times.len() == 1 {
            return Ok(TimeWeights {
                value: vec![bump.integral()],
                derivative: vec![0.0],
                trapezoid: vec![1.0],
            });
        }
        let trapezoid = trapezoid_weights(times);
        let value = times
            .iter()
            .zip(&trapezoid)
            .map(|(&t, w)| w * bump.value(t))
            .collect();
        let derivative = times
            .iter()
            .zip(&trapezoid)
            .map(|(&t, w)| w * bump.derivative(t))
            .collect();
        Ok(TimeWeights {
            value,
            derivative,
            trapezoid,
        })
    }
}

/// Trapezoid weights on a (possibly non-uniform) ladder; `[1]` for a single
/// frozen snapshot, which stands for a unit time interval.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let s = times.len();
    if s == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; s];
    for k in 0..s - 1 {
        let dt = times[k + 1] - times[k];
        w[k] += dt / 2.0;
        w[k + 1] += dt / 2.0;
    }
    w
}
