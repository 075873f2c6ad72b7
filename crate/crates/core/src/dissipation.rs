//! The mollified dissipation functional
//! `E_ε(ψ) = -½ ∫∫∫ ψ(t, x) ∇ρ_ε(z) · ⟨ν²_{x, x-z}, δv |δv|²⟩ dz dx dt`
//! with `δv = v₁ - v₂`, its behaviour along an ε ladder, and the
//! Kolmogorov-flux field it is built from.

use std::fmt::Write as _;

use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::field::GridField;
use crate::kernel::{ball_offsets, pair_map, pair_reduce};
use crate::mollifier::{Mollifier, Profile};
use crate::regularity::least_squares;
use crate::spectral::truncated_copy;
use crate::structure::EpsLadder;
use crate::testfn::TestFunction;

pub(crate) fn check_grid(ensemble: &Ensemble, mollifier: &Mollifier) -> Result<()> {
    if ensemble.grid() != mollifier.grid() {
        return Err(Error::GridMismatch(format!(
            "ensemble grid {:?} vs mollifier grid {:?}",
            ensemble.grid(),
            mollifier.grid()
        )));
    }
    Ok(())
}

/// Raw sums for one snapshot: `[Σ χ g·F, Σ |χ g·F|, Σ |δv|³]` over the
/// gradient stencil, without grid-volume factors.
fn snapshot_sums(field: &GridField, s: usize, mollifier: &Mollifier, chi: &[f64]) -> [f64; 3] {
    let grid = field.grid();
    let dim = grid.dim();
    let snap = field.snap(s);
    let grad = mollifier.grad_rho();
    pair_reduce::<3, _>(grid, mollifier.offsets(), |x, y, zi| {
        let g = &grad[zi];
        let mut d = [0.0; 3];
        let mut s2 = 0.0;
        for c in 0..dim {
            d[c] = snap.v[c][x] - snap.v[c][y];
            s2 += d[c] * d[c];
        }
        let gd: f64 = (0..dim).map(|c| g[c] * d[c]).sum();
        let term = chi[x] * gd * s2;
        [term, term.abs(), s2 * s2.sqrt()]
    })
}

/// One rung: the functional, its absolute-value sum (roundoff scale) and
/// the cubic increment average used by the proof bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct RungParts {
    pub value: f64,
    pub abs_sum: f64,
    pub d3: f64,
}

pub(crate) fn rung_parts(
    ensemble: &Ensemble,
    mollifier: &Mollifier,
    psi: &TestFunction,
) -> Result<RungParts> {
    check_grid(ensemble, mollifier)?;
    let grid = *ensemble.grid();
    let tw = psi.time_weights(ensemble.times())?;
    let chi = psi.space.sample(&grid);
    let vol = grid.cell_volume();
    let mut value = Vec::new();
    let mut abs = Vec::new();
    let mut d3 = Vec::new();
    for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
        for s in 0..ensemble.snapshots() {
            let r = snapshot_sums(m, s, mollifier, &chi);
            value.push(w * tw.value[s] * r[0]);
            abs.push(w * tw.value[s].abs() * r[1]);
            d3.push(w * tw.trapezoid[s] * r[2]);
        }
    }
    Ok(RungParts {
        value: -0.5 * pairwise_sum(&value) * vol * vol,
        abs_sum: 0.5 * pairwise_sum(&abs) * vol * vol,
        d3: pairwise_sum(&d3) * vol / mollifier.offsets().len() as f64,
    })
}

/// `E_ε(ψ)` for one mollifier.
pub fn dissipation_eps(
    ensemble: &Ensemble,
    mollifier: &Mollifier,
    psi: &TestFunction,
) -> Result<f64> {
    Ok(rung_parts(ensemble, mollifier, psi)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Vanishing,
    Nonvanishing,
    Inconclusive,
}

/// Thresholds of the tail classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerdictConfig {
    pub min_rungs: usize,
    pub tail: usize,
    pub floor_factor: f64,
    /// Largest tail slope (log|E| against log ε) still read as "not
    /// decaying".
    pub flat_slope: f64,
    /// Relative roundoff level applied to the absolute-value sum.
    pub roundoff: f64,
    /// Modes `|k_i| >= n / truncation_divisor` are removed for the floor copy.
    pub truncation_divisor: usize,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            min_rungs: 4,
            tail: 3,
            floor_factor: 10.0,
            flat_slope: 0.1,
            roundoff: 1e-12,
            truncation_divisor: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipationReport {
    pub eps: Vec<f64>,
    pub value: Vec<f64>,
    /// Quadrature floor per rung: the larger of the truncated-copy value and
    /// the roundoff level.
    pub floor: Vec<f64>,
    pub roundoff: Vec<f64>,
    /// `(C ‖ψ‖∞ / ε) d³` per rung.
    pub bound: Vec<f64>,
    pub bound_violations: usize,
    pub verdict: Verdict,
    /// Tail slope of `log |E_ε|` against `log ε`.
    pub slope: Option<f64>,
    pub psi: String,
    pub mollifier_profile: String,
}

impl DissipationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,value,floor,bound\n");
        for j in 0..self.eps.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.eps[j], self.value[j], self.floor[j], self.bound[j]
            );
        }
        out
    }
}

pub fn dissipation_report(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    psi: &TestFunction,
) -> Result<DissipationReport> {
    dissipation_report_with(
        ensemble,
        ladder,
        psi,
        Profile::Bump,
        &VerdictConfig::default(),
    )
}

pub fn dissipation_report_with(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    psi: &TestFunction,
    profile: Profile,
    config: &VerdictConfig,
) -> Result<DissipationReport> {
    let grid = *ensemble.grid();
    let cutoff = grid.n() / config.truncation_divisor;
    let truncated = ensemble.try_map(|m| truncated_copy(m, cutoff))?;
    let mut report = DissipationReport {
        eps: ladder.eps().to_vec(),
        value: Vec::new(),
        floor: Vec::new(),
        roundoff: Vec::new(),
        bound: Vec::new(),
        bound_violations: 0,
        verdict: Verdict::Inconclusive,
        slope: None,
        psi: psi.space.label(),
        mollifier_profile: profile.name().into(),
    };
    for &eps in ladder.eps() {
        let moll = Mollifier::with_profile(grid, eps, profile)?;
        let parts = rung_parts(ensemble, &moll, psi)?;
        let trunc = rung_parts(&truncated, &moll, psi)?;
        let roundoff = config.roundoff * parts.abs_sum;
        let bound = moll.bound_constant() * psi.sup_norm() / eps * parts.d3;
        if parts.value.abs() > bound * (1.0 + 1e-12) + 1e-300 {
            report.bound_violations += 1;
        }
        report.value.push(parts.value);
        report.roundoff.push(roundoff);
        report.floor.push(trunc.value.abs().max(roundoff));
        report.bound.push(bound);
    }
    let (verdict, slope) = classify(
        &report.eps,
        &report.value,
        &report.floor,
        &report.roundoff,
        config,
    );
    report.verdict = verdict;
    report.slope = slope;
    Ok(report)
}

/// Tail classification of a ladder of `E_ε` values (ladder order: ε
/// decreasing).
pub fn classify(
    eps: &[f64],
    values: &[f64],
    floor: &[f64],
    roundoff: &[f64],
    config: &VerdictConfig,
) -> (Verdict, Option<f64>) {
    let len = values.len();
    let tail = config.tail.min(len);
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let slope = if tail >= 2 && abs[len - tail..].iter().all(|&v| v > 0.0) {
        let pts: Vec<(f64, f64)> = (len - tail..len)
            .map(|j| (eps[j].ln(), abs[j].ln()))
            .collect();
        Some(least_squares(&pts).0)
    } else {
        None
    };
    if len < config.min_rungs {
        return (Verdict::Inconclusive, slope);
    }
    if abs.iter().zip(roundoff).all(|(a, r)| a <= r) {
        return (Verdict::Vanishing, None);
    }
    let last = abs[len - 1];
    let limit = config.floor_factor * floor[len - 1];
    let decreasing = abs[len - tail..].windows(2).all(|w| w[1] < w[0]);
    if decreasing && last <= limit {
        return (Verdict::Vanishing, slope);
    }
    if last > limit && slope.is_some_and(|s| s <= config.flat_slope) {
        return (Verdict::Nonvanishing, slope);
    }
    (Verdict::Inconclusive, slope)
}

/// Ensemble-averaged Kolmogorov flux at one instant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxField {
    pub eps: f64,
    /// `⨍_{|z|<ε} ⟨|δv|² δv⟩ dz`, component-major.
    pub vector: Vec<Vec<f64>>,
    /// `Σ_z ∇ρ_ε(z) · ⟨|δv|² δv⟩(x, z) h^d`, the mollified z-divergence.
    pub divergence: Vec<f64>,
}

pub fn structure_flux(ensemble: &Ensemble, eps: f64, t: f64) -> Result<FluxField> {
    let grid = *ensemble.grid();
    let moll = Mollifier::new(grid, eps)?;
    let s = ensemble.snapshot_at(t)?;
    let dim = grid.dim();
    let ball = ball_offsets(&grid, eps);
    let vol = grid.cell_volume();
    let mut vector = vec![vec![0.0; grid.len()]; dim];
    let mut divergence = vec![0.0; grid.len()];
    for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
        let snap = m.snap(s);
        let flux = |x: usize, y: usize| {
            let mut d = [0.0; 3];
            let mut s2 = 0.0;
            for c in 0..dim {
                d[c] = snap.v[c][x] - snap.v[c][y];
                s2 += d[c] * d[c];
            }
            [d[0] * s2, d[1] * s2, d[2] * s2]
        };
        let avg = pair_map::<3, _>(&grid, &ball, |x, y, _| flux(x, y));
        let grad = moll.grad_rho();
        let div = pair_map::<1, _>(&grid, moll.offsets(), |x, y, zi| {
            let f = flux(x, y);
            [grad[zi][0] * f[0] + grad[zi][1] * f[1] + grad[zi][2] * f[2]]
        });
        let inv = 1.0 / ball.len() as f64;
        for i in 0..grid.len() {
            for c in 0..dim {
                vector[c][i] += w * avg[i][c] * inv;
            }
            divergence[i] += w * div[i][0] * vol;
        }
    }
    Ok(FluxField {
        eps,
        vector,
        divergence,
    })
}
