//! Diagonal-continuity moduli
//! `d_ε^q = (∫∫ ⨍_{B_ε} ⟨ν², |ξ₁ - ξ₂|^q⟩ dz dx dt)^{1/q}` on ε ladders.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::grid::{Grid, EXTENT};
use crate::kernel::{ball_offsets, pair_reduce};
use crate::regularity::fit_exponent;

/// Strictly decreasing mollification radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsLadder {
    eps: Vec<f64>,
}

impl EpsLadder {
    pub fn new(mut eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidArgument(
                "ladder radii must be positive".into(),
            ));
        }
        eps.sort_by(|a, b| b.total_cmp(a));
        eps.dedup();
        Ok(Self { eps })
    }

    /// `ε_j = (L/8) 2^{-j}` down to `3h`.
    pub fn dyadic(grid: &Grid) -> Self {
        let min = 3.0 * grid.spacing();
        let mut eps = Vec::new();
        let mut e = EXTENT / 8.0;
        while e >= min * (1.0 - 1e-12) {
            eps.push(e);
            e /= 2.0;
        }
        if eps.is_empty() {
            eps.push(min);
        }
        Self { eps }
    }

    /// `count` geometrically spaced radii from `max` down to `min`.
    pub fn geometric(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 || !(min > 0.0 && max >= min) {
            return Err(Error::InvalidArgument(format!(
                "bad geometric ladder: min {min}, max {max}, count {count}"
            )));
        }
        if count == 1 {
            return Self::new(vec![max]);
        }
        let ratio = (min / max).powf(1.0 / (count - 1) as f64);
        let mut eps: Vec<f64> = (0..count).map(|j| max * ratio.powi(j as i32)).collect();
        eps[count - 1] = min;
        Self::new(eps)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureFunctionCurve {
    pub q: f64,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub alpha_fit: Option<f64>,
    /// Inclusive index range of the fit, in ladder order.
    pub window: Option<(usize, usize)>,
    pub residual: Option<f64>,
    /// `2 (∫∫⟨ν¹, |ξ|^q⟩)^{1/q}`
    pub minkowski_bound: f64,
}

impl StructureFunctionCurve {
    /// Builds a curve from raw values, fitting over rungs with `ε >= 8h`
    /// (or the whole ladder when that leaves fewer than three).
    pub fn from_values(
        q: f64,
        eps: Vec<f64>,
        values: Vec<f64>,
        h: f64,
        minkowski_bound: f64,
    ) -> Self {
        let window = default_window(&eps, h);
        let mut curve = Self {
            q,
            eps,
            values,
            alpha_fit: None,
            window: Some(window),
            residual: None,
            minkowski_bound,
        };
        if let Ok((alpha, residual)) = fit_exponent(&curve, Some(window)) {
            curve.alpha_fit = Some(alpha);
            curve.residual = Some(residual);
        }
        curve
    }

    pub fn minkowski_ok(&self) -> bool {
        self.values
            .iter()
            .all(|&v| v <= self.minkowski_bound + 1e-12)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,value,q\n");
        for (e, v) in self.eps.iter().zip(&self.values) {
            let _ = writeln!(out, "{e:.16e},{v:.16e},{:.16e}", self.q);
        }
        out
    }

    /// Two-column gnuplot data.
    pub fn to_dat(&self) -> String {
        let mut out = format!("# eps d_eps^{}\n", self.q);
        for (e, v) in self.eps.iter().zip(&self.values) {
            let _ = writeln!(out, "{e:.16e} {v:.16e}");
        }
        out
    }
}

fn default_window(eps: &[f64], h: f64) -> (usize, usize) {
    let resolved: Vec<usize> = (0..eps.len())
        .filter(|&j| eps[j] >= 8.0 * h * (1.0 - 1e-12))
        .collect();
    if resolved.len() >= 3 {
        (resolved[0], resolved[resolved.len() - 1])
    } else {
        (0, eps.len().saturating_sub(1))
    }
}

fn ball_for(grid: &Grid, eps: f64) -> Result<Vec<[i32; 3]>> {
    let ball = ball_offsets(grid, eps);
    if ball.len() <= 1 {
        return Err(Error::EmptyStencil { eps });
    }
    let min = 3.0 * grid.spacing();
    if eps < min * (1.0 - 1e-12) {
        return Err(Error::UnderResolved { eps, min });
    }
    Ok(ball)
}

/// `[∫∫⨍⟨|δv|^{1.5}⟩, ∫∫⨍⟨|δv|²⟩, ∫∫⨍⟨|δv|³⟩]` over the ball of radius `eps`,
/// per member (before weighting).
pub(crate) fn velocity_increment_moments(ensemble: &Ensemble, eps: f64) -> Result<Vec<[f64; 3]>> {
    let grid = *ensemble.grid();
    let ball = ball_for(&grid, eps)?;
    let tau = ensemble.trapezoid();
    let vol = grid.cell_volume();
    let dim = grid.dim();
    let scale = vol / ball.len() as f64;
    let per_member = ensemble
        .members()
        .iter()
        .map(|m| {
            let mut acc = [0.0; 3];
            for (s, ts) in tau.iter().enumerate() {
                let snap = m.snap(s);
                let r = pair_reduce::<3, _>(&grid, &ball, |x, y, _| {
                    let mut s2 = 0.0;
                    for c in 0..dim {
                        let d = snap.v[c][x] - snap.v[c][y];
                        s2 += d * d;
                    }
                    let s3 = s2 * s2.sqrt();
                    [s3.sqrt(), s2, s3]
                });
                for k in 0..3 {
                    acc[k] += ts * r[k] * scale;
                }
            }
            acc
        })
        .collect();
    Ok(per_member)
}

/// `∫∫⨍⟨|δp|^{3/2}⟩` per member.
pub(crate) fn pressure_increment_moments(ensemble: &Ensemble, eps: f64) -> Result<Vec<f64>> {
    ensemble.require_pressure()?;
    let grid = *ensemble.grid();
    let ball = ball_for(&grid, eps)?;
    let tau = ensemble.trapezoid();
    let scale = grid.cell_volume() / ball.len() as f64;
    Ok(ensemble
        .members()
        .iter()
        .map(|m| {
            let mut acc = 0.0;
            for (s, ts) in tau.iter().enumerate() {
                let p = m.pressure(s).expect("pressure checked");
                let r = pair_reduce::<1, _>(&grid, &ball, |x, y, _| {
                    let d = (p[x] - p[y]).abs();
                    [d * d.sqrt()]
                });
                acc += ts * r[0] * scale;
            }
            acc
        })
        .collect())
}

fn weighted(ensemble: &Ensemble, per_member: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = per_member
        .zip(ensemble.weights())
        .map(|(v, w)| w * v)
        .collect();
    pairwise_sum(&terms)
}

fn exponent_index(q: f64) -> Result<usize> {
    match q {
        q if q == 1.5 => Ok(0),
        q if q == 2.0 => Ok(1),
        q if q == 3.0 => Ok(2),
        _ => Err(Error::UnsupportedExponent(q)),
    }
}

/// `∫∫⟨ν¹, |v|^q⟩ dx dt`.
pub(crate) fn velocity_lq(ensemble: &Ensemble, q: f64) -> f64 {
    let grid = ensemble.grid();
    let tau = ensemble.trapezoid();
    let vol = grid.cell_volume();
    weighted(
        ensemble,
        ensemble.members().iter().map(|m| {
            let terms: Vec<f64> = tau
                .iter()
                .enumerate()
                .map(|(s, ts)| {
                    let powers: Vec<f64> = crate::ensemble::speed2_samples(m, s)
                        .iter()
                        .map(|e| e.powf(q / 2.0))
                        .collect();
                    ts * pairwise_sum(&powers) * vol
                })
                .collect();
            pairwise_sum(&terms)
        }),
    )
}

fn pressure_lq(ensemble: &Ensemble, q: f64) -> f64 {
    let vol = ensemble.grid().cell_volume();
    let tau = ensemble.trapezoid();
    weighted(
        ensemble,
        ensemble.members().iter().map(|m| {
            let terms: Vec<f64> = tau
                .iter()
                .enumerate()
                .map(|(s, ts)| {
                    let p = m.pressure(s).unwrap_or(&[]);
                    let powers: Vec<f64> = p.iter().map(|v| v.abs().powf(q)).collect();
                    ts * pairwise_sum(&powers) * vol
                })
                .collect();
            pairwise_sum(&terms)
        }),
    )
}

/// `d_ε^q` along the ladder for `q ∈ {3/2, 2, 3}`, with the fitted exponent.
pub fn structure_function(
    ensemble: &Ensemble,
    q: f64,
    ladder: &EpsLadder,
) -> Result<StructureFunctionCurve> {
    let k = exponent_index(q)?;
    let mut values = Vec::with_capacity(ladder.len());
    for &eps in ladder.eps() {
        let per = velocity_increment_moments(ensemble, eps)?;
        let integral = weighted(ensemble, per.iter().map(|r| r[k]));
        values.push(integral.powf(1.0 / q));
    }
    let bound = 2.0 * velocity_lq(ensemble, q).powf(1.0 / q);
    Ok(StructureFunctionCurve::from_values(
        q,
        ladder.eps().to_vec(),
        values,
        ensemble.grid().spacing(),
        bound,
    ))
}

/// The three components of the mixed diagonal-continuity modulus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedDc {
    pub velocity_q2: StructureFunctionCurve,
    pub velocity_q3: StructureFunctionCurve,
    pub pressure_q15: StructureFunctionCurve,
    /// `∫∫⨍⟨|δv|² + |δv|³ + |δp|^{3/2}⟩` per rung.
    pub total: Vec<f64>,
}

pub fn mixed_dc(ensemble: &Ensemble, ladder: &EpsLadder) -> Result<MixedDc> {
    ensemble.require_pressure()?;
    let h = ensemble.grid().spacing();
    let (mut v2, mut v3, mut p15, mut total) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &eps in ladder.eps() {
        let vel = velocity_increment_moments(ensemble, eps)?;
        let pre = pressure_increment_moments(ensemble, eps)?;
        let a = weighted(ensemble, vel.iter().map(|r| r[1]));
        let b = weighted(ensemble, vel.iter().map(|r| r[2]));
        let c = weighted(ensemble, pre.iter().copied());
        v2.push(a.sqrt());
        v3.push(b.cbrt());
        p15.push(c.powf(2.0 / 3.0));
        total.push(a + b + c);
    }
    let eps = ladder.eps().to_vec();
    Ok(MixedDc {
        velocity_q2: StructureFunctionCurve::from_values(
            2.0,
            eps.clone(),
            v2,
            h,
            2.0 * velocity_lq(ensemble, 2.0).sqrt(),
        ),
        velocity_q3: StructureFunctionCurve::from_values(
            3.0,
            eps.clone(),
            v3,
            h,
            2.0 * velocity_lq(ensemble, 3.0).cbrt(),
        ),
        pressure_q15: StructureFunctionCurve::from_values(
            1.5,
            eps,
            p15,
            h,
            2.0 * pressure_lq(ensemble, 1.5).powf(2.0 / 3.0),
        ),
        total,
    })
}
