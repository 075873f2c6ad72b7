//! Weighted finite ensembles and their empirical correlation hierarchy.
//!
//! For an ensemble `{(w_m, v_m)}` the k-point correlation measure at
//! `(x₁, …, x_k)` is `Σ_m w_m δ_{v_m(x₁)} ⊗ ⋯ ⊗ δ_{v_m(x_k)}`, so every
//! moment is an exact weighted sum over members.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::field::{span_of, GridField};
use crate::grid::Grid;
use crate::structure::{structure_function, EpsLadder};
use crate::testfn::trapezoid_weights;

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: Vec<GridField>,
    weights: Vec<f64>,
}

/// Builds an ensemble; weights default to uniform and are normalized to sum
/// to one.
pub fn make_ensemble(fields: Vec<GridField>, weights: Option<Vec<f64>>) -> Result<Ensemble> {
    Ensemble::new(fields, weights)
}

impl Ensemble {
    pub fn new(members: Vec<GridField>, weights: Option<Vec<f64>>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        for (i, m) in members.iter().enumerate().skip(1) {
            if m.grid() != first.grid() {
                return Err(Error::GridMismatch(format!(
                    "member {i} lives on {:?}, member 0 on {:?}",
                    m.grid(),
                    first.grid()
                )));
            }
            if m.times() != first.times() {
                return Err(Error::InconsistentMembers(format!(
                    "member {i} has a different snapshot ladder"
                )));
            }
            if m.has_pressure() != first.has_pressure() {
                return Err(Error::InconsistentMembers(format!(
                    "member {i} disagrees on pressure presence"
                )));
            }
        }
        let count = members.len();
        let weights = match weights {
            None => vec![1.0 / count as f64; count],
            Some(w) => normalize_weights(w, count)?,
        };
        Ok(Self { members, weights })
    }

    /// Keeps the given weights bit-for-bit; they must already sum to one
    /// within 1e-12.
    pub(crate) fn from_normalized(members: Vec<GridField>, weights: Vec<f64>) -> Result<Self> {
        let probe = Self::new(members, Some(weights.clone()))?;
        if (pairwise_sum(&weights) - 1.0).abs() > 1e-12 {
            return Err(Error::ShapeMismatch("weights do not sum to one".into()));
        }
        Ok(Self {
            members: probe.members,
            weights,
        })
    }

    pub fn single(field: GridField) -> Self {
        Self {
            members: vec![field],
            weights: vec![1.0],
        }
    }

    /// Convex combination `a·self + (1 - a)·other` of two ensembles on the
    /// same grid and time ladder.
    pub fn mixture(&self, a: f64, other: &Ensemble) -> Result<Ensemble> {
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| a * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - a) * w));
        Ensemble::new(members, Some(weights))
    }

    /// Applies `f` to every member, keeping the weights.
    pub fn try_map<F>(&self, f: F) -> Result<Ensemble>
    where
        F: Fn(&GridField) -> Result<GridField>,
    {
        let members = self.members.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ensemble::new(members, Some(self.weights.clone()))
    }

    pub fn members(&self) -> &[GridField] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.members[0].grid()
    }

    pub fn times(&self) -> &[f64] {
        self.members[0].times()
    }

    pub fn snapshots(&self) -> usize {
        self.members[0].snapshots()
    }

    pub fn has_pressure(&self) -> bool {
        self.members[0].has_pressure()
    }

    pub(crate) fn require_pressure(&self) -> Result<()> {
        if self.has_pressure() {
            Ok(())
        } else {
            Err(Error::MissingPressure)
        }
    }

    /// Index of the snapshot at time `t`. A single frozen snapshot answers
    /// for its whole unit interval.
    pub fn snapshot_at(&self, t: f64) -> Result<usize> {
        let times = self.times();
        let (a, b) = span_of(times);
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(t >= a - tol && t <= b + tol) {
            return Err(Error::TimeOutOfRange {
                t,
                start: a,
                end: b,
            });
        }
        if times.len() == 1 {
            return Ok(0);
        }
        times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::InvalidArgument(format!("t = {t} is not a snapshot time")))
    }

    /// Trapezoid weights of the snapshot ladder.
    pub fn trapezoid(&self) -> Vec<f64> {
        trapezoid_weights(self.times())
    }
}

fn normalize_weights(w: Vec<f64>, count: usize) -> Result<Vec<f64>> {
    if w.len() != count {
        return Err(Error::InconsistentMembers(format!(
            "{} weights for {count} members",
            w.len()
        )));
    }
    if let Some((index, &value)) = w
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::NegativeWeight { index, value });
    }
    let total = pairwise_sum(&w);
    if total <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Phase-space sample of one member at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub v: [f64; 3],
    pub p: Option<f64>,
}

impl PointValue {
    pub fn speed2(&self) -> f64 {
        self.v.iter().map(|c| c * c).sum()
    }
}

/// `Σ_m w_m g(u_m(x₁), …, u_m(x_k))` at time `t`, `u = (v, p)`.
pub fn moment<G>(ensemble: &Ensemble, t: f64, points: &[&[f64]], g: G) -> Result<f64>
where
    G: Fn(&[PointValue]) -> f64,
{
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "moment needs at least one point".into(),
        ));
    }
    let s = ensemble.snapshot_at(t)?;
    let grid = ensemble.grid();
    let nodes = points
        .iter()
        .map(|x| grid.node_at(x).ok_or_else(|| Error::OffGrid(x.to_vec())))
        .collect::<Result<Vec<_>>>()?;
    let terms: Vec<f64> = ensemble
        .members()
        .iter()
        .zip(ensemble.weights())
        .map(|(m, w)| {
            let vals: Vec<PointValue> = nodes.iter().map(|&i| point_value(m, s, i)).collect();
            w * g(&vals)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

pub(crate) fn point_value(field: &GridField, s: usize, i: usize) -> PointValue {
    let mut v = [0.0; 3];
    for (c, slot) in v.iter_mut().enumerate().take(field.grid().dim()) {
        *slot = field.component(s, c)[i];
    }
    PointValue {
        v,
        p: field.pressure(s).map(|p| p[i]),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub symmetry_residual: f64,
    pub consistency_residual: f64,
    /// `sup_t ∫⟨ν¹, |v|²⟩ dx`
    pub l2_sup: f64,
    /// `∫∫⟨ν¹, |v|³⟩ dx dt`
    pub l3_integral: f64,
    /// `∫∫⟨ν¹, |p|^{3/2}⟩ dx dt`, when pressure is present.
    pub p32_integral: Option<f64>,
    pub dc_eps: Vec<f64>,
    /// `d_ε²` along the ladder.
    pub dc_values: Vec<f64>,
    pub dc_monotone: bool,
    pub minkowski_ok: bool,
    pub symmetry_ok: bool,
    pub consistency_ok: bool,
}

impl AxiomReport {
    pub fn all_ok(&self) -> bool {
        self.symmetry_ok && self.consistency_ok && self.minkowski_ok && self.dc_monotone
    }
}

const AXIOM_TOL: f64 = 1e-13;
const PROBES: usize = 16;

/// Symmetry and consistency at sampled node pairs, the `L²`/`L³` bounds, and
/// the diagonal-continuity ladder for `q = 2`.
pub fn check_axioms(ensemble: &Ensemble, ladder: &EpsLadder) -> Result<AxiomReport> {
    let grid = *ensemble.grid();
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a_c1_05);
    let mut symmetry: f64 = 0.0;
    let mut consistency: f64 = 0.0;
    let asym = |a: &PointValue, b: &PointValue| {
        a.v[0] * b.v[0] * b.v[0] + a.v[dim - 1] * b.v[0] + (a.v[0] - 2.0 * b.v[dim - 1]).sin()
    };
    for probe in 0..PROBES {
        let s = probe % ensemble.snapshots();
        let t = if ensemble.snapshots() == 1 {
            ensemble.times()[0]
        } else {
            ensemble.times()[s]
        };
        let x = grid.coords(rng.random_range(0..grid.len()));
        let y = grid.coords(rng.random_range(0..grid.len()));
        let (x, y) = (&x[..dim], &y[..dim]);
        let xy = moment(ensemble, t, &[x, y], |u| asym(&u[0], &u[1]))?;
        let yx = moment(ensemble, t, &[y, x], |u| asym(&u[1], &u[0]))?;
        symmetry = symmetry.max((xy - yx).abs());
        let diag = moment(ensemble, t, &[x, x], |u| {
            (0..3).map(|c| u[0].v[c] * u[1].v[c]).sum()
        })?;
        let one = moment(ensemble, t, &[x], |u| u[0].speed2())?;
        consistency = consistency.max((diag - one).abs());
        let restricted = moment(ensemble, t, &[x, y], |u| u[0].speed2())?;
        consistency = consistency.max((restricted - one).abs());
    }

    let vol = grid.cell_volume();
    let tau = ensemble.trapezoid();
    let mut l2_sup: f64 = 0.0;
    let mut l3 = Vec::new();
    let mut p32 = Vec::new();
    for s in 0..ensemble.snapshots() {
        let mut l2 = Vec::new();
        for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
            let speed2 = speed2_samples(m, s);
            l2.push(w * pairwise_sum(&speed2) * vol);
            let cubes: Vec<f64> = speed2.iter().map(|e| e * e.sqrt()).collect();
            l3.push(tau[s] * w * pairwise_sum(&cubes) * vol);
            if let Some(p) = m.pressure(s) {
                let a: Vec<f64> = p.iter().map(|v| v.abs().powf(1.5)).collect();
                p32.push(tau[s] * w * pairwise_sum(&a) * vol);
            }
        }
        l2_sup = l2_sup.max(pairwise_sum(&l2));
    }

    let curve = structure_function(ensemble, 2.0, ladder)?;
    let top = curve.values.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * top + 1e-300;
    let dc_monotone = curve.values.windows(2).all(|w| w[1] <= w[0] + floor);
    let minkowski_ok = curve.minkowski_ok();
    Ok(AxiomReport {
        symmetry_residual: symmetry,
        consistency_residual: consistency,
        l2_sup,
        l3_integral: pairwise_sum(&l3),
        p32_integral: ensemble.has_pressure().then(|| pairwise_sum(&p32)),
        dc_eps: curve.eps.clone(),
        dc_values: curve.values.clone(),
        dc_monotone,
        minkowski_ok,
        symmetry_ok: symmetry <= AXIOM_TOL,
        consistency_ok: consistency <= AXIOM_TOL,
    })
}

pub(crate) fn speed2_samples(field: &GridField, s: usize) -> Vec<f64> {
    let dim = field.grid().dim();
    (0..field.grid().len())
        .map(|i| (0..dim).map(|c| field.component(s, c)[i].powi(2)).sum())
        .collect()
}
