//! Weak-form residuals of the first two moment equations, the
//! divergence constraint, the five-term regularized energy balance and the
//! local/global energy identities.
//!
//! Time derivatives are always taken weakly: `θ'` is integrated against the
//! data with the per-snapshot weights of [`TestFunction::time_weights`].

use serde::Serialize;

use crate::dissipation::{check_grid, dissipation_eps};
use crate::ensemble::{point_value, Ensemble, PointValue};
use crate::error::{Error, Result};
use crate::exec::{map_range, pairwise_sum, pairwise_sum_arrays};
use crate::field::GridField;
use crate::kernel::pair_reduce;
use crate::mollifier::Mollifier;
use crate::spectral::refine;
use crate::testfn::{SpatialMode, TestFunction, TimeBump, TimeWeights};

fn check_component(ensemble: &Ensemble, c: usize) -> Result<()> {
    if c >= ensemble.grid().dim() {
        return Err(Error::InvalidArgument(format!(
            "component {c} out of range for d = {}",
            ensemble.grid().dim()
        )));
    }
    Ok(())
}

/// `Σ_m w_m Σ_s f(member, s)`, reduced pairwise.
fn over_members<F>(ensemble: &Ensemble, f: F) -> f64
where
    F: Fn(&GridField, usize) -> f64,
{
    let mut terms = Vec::new();
    for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
        for s in 0..ensemble.snapshots() {
            terms.push(w * f(m, s));
        }
    }
    pairwise_sum(&terms)
}

/// Sum of `f(x)` over the grid, reduced pairwise.
fn grid_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&map_range(len, f))
}

/// Grid samples of a spatial mode and its gradient.
struct Sampled {
    chi: Vec<f64>,
    grad: Vec<Vec<f64>>,
}

impl Sampled {
    fn new(mode: &SpatialMode, ensemble: &Ensemble) -> Self {
        let grid = ensemble.grid();
        Self {
            chi: mode.sample(grid),
            grad: mode.sample_gradient(grid),
        }
    }

    fn grad_dot(&self, x: usize, v: &[&[f64]; 3], dim: usize) -> f64 {
        (0..dim).map(|c| self.grad[c][x] * v[c][x]).sum()
    }
}

/// Per-node factors of the first moment equation for component `i`:
/// `[Σ χ v^i, Σ (v^i v·∇χ + p ∂_i χ)]`.
fn k1_factors(m: &GridField, s: usize, t: &Sampled, i: usize) -> [f64; 2] {
    let dim = m.grid().dim();
    let snap = m.snap(s);
    let p = snap.p.expect("pressure checked");
    let parts = map_range(m.grid().len(), |x| {
        let vi = snap.v[i][x];
        [
            t.chi[x] * vi,
            vi * t.grad_dot(x, &snap.v, dim) + p[x] * t.grad[i][x],
        ]
    });
    pairwise_sum_arrays(&parts)
}

/// `∫∫ ⟨ν¹, v^i⟩ ∂_t φ + ⟨ν¹, v^i v⟩·∇φ + ⟨ν¹, p⟩ ∂_i φ dx dt`.
pub fn weak_residual_k1(ensemble: &Ensemble, phi: &TestFunction, i: usize) -> Result<f64> {
    ensemble.require_pressure()?;
    check_component(ensemble, i)?;
    let tw = phi.time_weights(ensemble.times())?;
    let t = Sampled::new(&phi.space, ensemble);
    let vol = ensemble.grid().cell_volume();
    Ok(over_members(ensemble, |m, s| {
        let [a, b] = k1_factors(m, s, &t, i);
        tw.derivative[s] * a + tw.value[s] * b
    }) * vol)
}

/// A spatial two-point test function `η(x, y)` with its gradients.
pub trait PairTest: Sync {
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64]) -> [f64; 3];
    fn grad_y(&self, x: &[f64], y: &[f64]) -> [f64; 3];
}

/// `η(x, y) = χ₁(x) χ₂(y)`.
impl PairTest for (SpatialMode, SpatialMode) {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.value(x) * self.1.value(y)
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> [f64; 3] {
        let b = self.1.value(y);
        self.0.gradient(x).map(|g| g * b)
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> [f64; 3] {
        let a = self.0.value(x);
        self.1.gradient(y).map(|g| g * a)
    }
}

/// Test functions on `(0, T) × D × D` for the second moment equation.
#[derive(Clone, Copy)]
pub enum Phi2<'a> {
    /// `θ(t) χ₁(x) χ₂(y)`, evaluated by factorization.
    Separable {
        time: Option<TimeBump>,
        x: SpatialMode,
        y: SpatialMode,
    },
    /// `ψ(t, x) ρ_ε(x - y)`; the y-sum is local to the mollifier stencil.
    Mollified {
        mollifier: &'a Mollifier,
        psi: TestFunction,
    },
    /// `θ(t) η(x, y)` by full two-point quadrature (subject to a cost guard).
    General {
        time: Option<TimeBump>,
        eta: &'a dyn PairTest,
    },
}

/// Largest grid for the full two-point quadrature.
const GENERAL_MAX_NODES: usize = 128 * 128;

/// `∫∫∫ ⟨ν², v₁^i v₂^j⟩ ∂_tφ + ⟨ν², v₁^i v₂^j v₁⟩·∇_xφ + ⟨ν², v₁^i v₂^j v₂⟩·∇_yφ
///  + ⟨ν², p₁ v₂^j⟩ ∂_{x^i}φ + ⟨ν², v₁^i p₂⟩ ∂_{y^j}φ dx dy dt`.
pub fn weak_residual_k2(ensemble: &Ensemble, phi: &Phi2<'_>, i: usize, j: usize) -> Result<f64> {
    ensemble.require_pressure()?;
    check_component(ensemble, i)?;
    check_component(ensemble, j)?;
    let vol = ensemble.grid().cell_volume();
    match phi {
        Phi2::Separable { time, x, y } => {
            let tw = TestFunction::new(*time, *x).time_weights(ensemble.times())?;
            let tx = Sampled::new(x, ensemble);
            let ty = Sampled::new(y, ensemble);
            Ok(over_members(ensemble, |m, s| {
                let [a1, a23] = k1_factors(m, s, &tx, i);
                let [b1, b23] = k1_factors(m, s, &ty, j);
                tw.derivative[s] * a1 * b1 + tw.value[s] * (a23 * b1 + a1 * b23)
            }) * vol
                * vol)
        }
        Phi2::Mollified { mollifier, psi } => {
            check_grid(ensemble, mollifier)?;
            let tw = psi.time_weights(ensemble.times())?;
            let t = Sampled::new(&psi.space, ensemble);
            Ok(over_members(ensemble, |m, s| {
                mollified_k2(m, s, mollifier, &t, &tw, i, j)
            }) * vol
                * vol)
        }
        Phi2::General { time, eta } => {
            let grid = ensemble.grid();
            if grid.len() > GENERAL_MAX_NODES {
                return Err(Error::CostGuard {
                    n: grid.n(),
                    dim: grid.dim(),
                });
            }
            let tw =
                TestFunction::new(*time, SpatialMode::constant()).time_weights(ensemble.times())?;
            Ok(over_members(ensemble, |m, s| general_k2(m, s, *eta, &tw, i, j)) * vol * vol)
        }
    }
}

fn mollified_k2(
    m: &GridField,
    s: usize,
    moll: &Mollifier,
    t: &Sampled,
    tw: &TimeWeights,
    i: usize,
    j: usize,
) -> f64 {
    let grid = m.grid();
    let dim = grid.dim();
    let snap = m.snap(s);
    let p = snap.p.expect("pressure checked");
    let rho = moll.rho();
    let grad = moll.grad_rho();
    let r = pair_reduce::<2, _>(grid, moll.offsets(), |x, y, zi| {
        let (rz, g) = (rho[zi], &grad[zi]);
        let c = t.chi[x];
        let prod = snap.v[i][x] * snap.v[j][y];
        let mut adv = 0.0;
        let mut gx_i = 0.0;
        for a in 0..dim {
            let gx = t.grad[a][x] * rz + c * g[a];
            let gy = -c * g[a];
            adv += prod * (snap.v[a][x] * gx + snap.v[a][y] * gy);
            if a == i {
                gx_i = gx;
            }
        }
        let gy_j = -c * g[j];
        let pres = p[x] * snap.v[j][y] * gx_i + snap.v[i][x] * p[y] * gy_j;
        [c * rz * prod, adv + pres]
    });
    tw.derivative[s] * r[0] + tw.value[s] * r[1]
}

fn general_k2(
    m: &GridField,
    s: usize,
    eta: &dyn PairTest,
    tw: &TimeWeights,
    i: usize,
    j: usize,
) -> f64 {
    let grid = *m.grid();
    let dim = grid.dim();
    let snap = m.snap(s);
    let p = snap.p.expect("pressure checked");
    let rows = map_range(grid.len(), |x| {
        let cx = grid.coords(x);
        let mut acc = [0.0; 2];
        for y in 0..grid.len() {
            let cy = grid.coords(y);
            let (xs, ys) = (&cx[..dim], &cy[..dim]);
            let e = eta.value(xs, ys);
            let gx = eta.grad_x(xs, ys);
            let gy = eta.grad_y(xs, ys);
            let prod = snap.v[i][x] * snap.v[j][y];
            let mut adv = 0.0;
            for a in 0..dim {
                adv += prod * (snap.v[a][x] * gx[a] + snap.v[a][y] * gy[a]);
            }
            acc[0] += prod * e;
            acc[1] += adv + p[x] * snap.v[j][y] * gx[i] + snap.v[i][x] * p[y] * gy[j];
        }
        acc
    });
    let r = pairwise_sum_arrays(&rows);
    tw.derivative[s] * r[0] + tw.value[s] * r[1]
}

/// Test function of the divergence constraint,
/// `φ(t, x₁, …, x_k) = θ(t) Π χ_l(x_l)`, differentiated in `x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivTest {
    pub time: Option<TimeBump>,
    pub modes: Vec<SpatialMode>,
}

/// `∫∫ ∇_{x_k}φ · ⟨ν^k, κ(v₁, …, v_{k-1}) v_k⟩ dx dt` for `k ∈ {1, 2}`; for
/// `k = 1` the observable is ignored.
pub fn divfree_residual<K>(ensemble: &Ensemble, phi: &DivTest, kappa: K, k: usize) -> Result<f64>
where
    K: Fn(&PointValue) -> f64 + Sync,
{
    if !(1..=2).contains(&k) || phi.modes.len() != k {
        return Err(Error::InvalidArgument(format!(
            "divergence constraint needs k in {{1, 2}} with k modes, got k = {k}, {} modes",
            phi.modes.len()
        )));
    }
    let tw = TestFunction::new(phi.time, phi.modes[0]).time_weights(ensemble.times())?;
    let last = Sampled::new(&phi.modes[k - 1], ensemble);
    let first = Sampled::new(&phi.modes[0], ensemble);
    let dim = ensemble.grid().dim();
    let len = ensemble.grid().len();
    let vol = ensemble.grid().cell_volume();
    let r = over_members(ensemble, |m, s| {
        let snap = m.snap(s);
        let flux = grid_sum(len, |x| last.grad_dot(x, &snap.v, dim));
        let weight = if k == 2 {
            grid_sum(len, |x| first.chi[x] * kappa(&point_value(m, s, x))) * vol
        } else {
            1.0
        };
        tw.value[s] * weight * flux
    });
    Ok(r * vol)
}

/// The five terms of the regularized energy balance obtained from the
/// second moment equation with `φ = ψ(t, x) ρ_ε(x - y)`, `i = j` summed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceBreakdown {
    pub eps: f64,
    /// `A₁ … A₅`
    pub terms: [f64; 5],
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub sum: f64,
    /// Sum of the absolute integrand values of all five terms, the roundoff
    /// scale of `sum`.
    pub abs_sum: f64,
    /// ε → 0 limits of `A₁`, `A₃` and `A₄ + A₅`.
    pub limits: [f64; 3],
    /// Weak form of the local energy identity's left side tested against ψ.
    pub lhs_weak: f64,
}

impl BalanceBreakdown {
    /// `lhs_weak - A₂,₁`, rebuilt from the terms as
    /// `-sum + (A₁ - L₁) + (A₃ - L₃) + (A₄ + A₅ - L₄₅) + A₂,₂`.
    pub fn rearranged_residual(&self) -> f64 {
        let [a1, _, a3, a4, a5] = self.terms;
        let [l1, l3, l45] = self.limits;
        -self.sum + (a1 - l1) + (a3 - l3) + (a4 + a5 - l45) + self.a22
    }
}

/// Each term is its own quadrature over `(x, z)` with `v₁ = v(x)`,
/// `v₂ = v(x - z)`:
/// `A₁ = ∫∂_tψ ρ⟨v₁·v₂⟩`, `A₂ = ∫ψ ∇ρ·⟨(v₁ - v₂)(v₁·v₂)⟩`,
/// `A₃ = ∫∇ψ·ρ⟨v₁(v₁·v₂)⟩`, `A₄ = ∫ψ ∇ρ·⟨v₂p₁ - v₁p₂⟩`, `A₅ = ∫∇ψ·ρ⟨v₂p₁⟩`.
pub fn five_term_balance(
    ensemble: &Ensemble,
    mollifier: &Mollifier,
    psi: &TestFunction,
) -> Result<BalanceBreakdown> {
    ensemble.require_pressure()?;
    check_grid(ensemble, mollifier)?;
    let tw = psi.time_weights(ensemble.times())?;
    let t = Sampled::new(&psi.space, ensemble);
    let grid = *ensemble.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let rho = mollifier.rho();
    let grad = mollifier.grad_rho();

    let mut parts: Vec<[f64; 11]> = Vec::new();
    for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
        for s in 0..ensemble.snapshots() {
            let snap = m.snap(s);
            let p = snap.p.expect("pressure checked");
            let r = pair_reduce::<11, _>(&grid, mollifier.offsets(), |x, y, zi| {
                let (rz, g) = (rho[zi], &grad[zi]);
                let c = t.chi[x];
                let (mut dot, mut e1, mut e2) = (0.0, 0.0, 0.0);
                let (mut gd, mut gv2, mut gv1, mut hv1, mut hv2) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for a in 0..dim {
                    let (u1, u2) = (snap.v[a][x], snap.v[a][y]);
                    dot += u1 * u2;
                    e1 += u1 * u1;
                    e2 += u2 * u2;
                    gd += g[a] * (u1 - u2);
                    gv1 += g[a] * u1;
                    gv2 += g[a] * u2;
                    hv1 += t.grad[a][x] * u1;
                    hv2 += t.grad[a][x] * u2;
                }
                let d2 = e1 - 2.0 * dot + e2;
                let cr = c * rz;
                let (a2, a3, a4, a5) = (
                    c * gd * dot,
                    rz * hv1 * dot,
                    c * (gv2 * p[x] - gv1 * p[y]),
                    rz * hv2 * p[x],
                );
                [
                    cr * dot,
                    0.5 * cr * (e1 + e2),
                    -0.5 * cr * d2,
                    a2,
                    -0.5 * c * gd * d2,
                    0.5 * c * gd * (e1 + e2),
                    a3,
                    a4,
                    a5,
                    (cr * dot).abs(),
                    a2.abs() + a3.abs() + a4.abs() + a5.abs(),
                ]
            });
            let mut out = [0.0; 11];
            for k in 0..11 {
                let wt = match k {
                    0..=2 => tw.derivative[s],
                    9 => tw.derivative[s].abs(),
                    10 => tw.value[s].abs(),
                    _ => tw.value[s],
                };
                out[k] = w * wt * r[k] * vol * vol;
            }
            parts.push(out);
        }
    }
    let r = pairwise_sum_arrays(&parts);
    let limits = energy_limits(ensemble, psi)?;
    let terms = [r[0], r[3], r[6], r[7], r[8]];
    Ok(BalanceBreakdown {
        eps: mollifier.eps(),
        terms,
        a11: r[1],
        a12: r[2],
        a21: r[4],
        a22: r[5],
        sum: pairwise_sum(&terms),
        abs_sum: r[9] + r[10],
        limits,
        lhs_weak: -(limits[0] + limits[1] + limits[2]),
    })
}

/// `[Σω'⟨|v|²⟩χ, Σω⟨|v|²v⟩·∇χ, Σω⟨2pv⟩·∇χ]` times `h^d`.
fn energy_limits(ensemble: &Ensemble, psi: &TestFunction) -> Result<[f64; 3]> {
    ensemble.require_pressure()?;
    let tw = psi.time_weights(ensemble.times())?;
    let t = Sampled::new(&psi.space, ensemble);
    let grid = *ensemble.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let mut parts = Vec::new();
    for (m, w) in ensemble.members().iter().zip(ensemble.weights()) {
        for s in 0..ensemble.snapshots() {
            let snap = m.snap(s);
            let p = snap.p.expect("pressure checked");
            let rows = map_range(grid.len(), |x| {
                let e: f64 = (0..dim).map(|c| snap.v[c][x] * snap.v[c][x]).sum();
                let gv = t.grad_dot(x, &snap.v, dim);
                [t.chi[x] * e, e * gv, 2.0 * p[x] * gv]
            });
            let r = pairwise_sum_arrays(&rows);
            parts.push([
                w * tw.derivative[s] * r[0] * vol,
                w * tw.value[s] * r[1] * vol,
                w * tw.value[s] * r[2] * vol,
            ]);
        }
    }
    Ok(pairwise_sum_arrays(&parts))
}

/// `-∫∫⟨ν¹, |v|²⟩ ∂_tψ - ∫∫⟨ν¹, |v|²v + 2pv⟩·∇ψ`, the weak left side of the
/// local energy identity.
pub fn local_energy_lhs(ensemble: &Ensemble, psi: &TestFunction) -> Result<f64> {
    let l = energy_limits(ensemble, psi)?;
    Ok(-(l[0] + l[1] + l[2]))
}

/// `local_energy_lhs(ψ) - E_ε(ψ)` for each mollifier.
pub fn local_energy_residual(
    ensemble: &Ensemble,
    mollifiers: &[Mollifier],
    psi: &TestFunction,
) -> Result<Vec<f64>> {
    let lhs = local_energy_lhs(ensemble, psi)?;
    mollifiers
        .iter()
        .map(|m| Ok(lhs - dissipation_eps(ensemble, m, psi)?))
        .collect()
}

/// `∫⟨ν¹_t, |v|²⟩/2 dx`.
pub fn global_energy(ensemble: &Ensemble, t: f64) -> Result<f64> {
    let s = ensemble.snapshot_at(t)?;
    let grid = *ensemble.grid();
    let dim = grid.dim();
    let per: Vec<f64> = ensemble
        .members()
        .iter()
        .zip(ensemble.weights())
        .map(|(m, w)| {
            let snap = m.snap(s);
            w * grid_sum(grid.len(), |x| {
                (0..dim).map(|c| snap.v[c][x] * snap.v[c][x]).sum()
            })
        })
        .collect();
    Ok(0.5 * pairwise_sum(&per) * grid.cell_volume())
}

/// Quadrature floor of a functional by resolution doubling:
/// `|f(ensemble) - f(refined ensemble)|`, the refined copy obtained by exact
/// Fourier interpolation onto a grid with twice the points per axis.
pub fn doubling_floor<F>(ensemble: &Ensemble, f: F) -> Result<f64>
where
    F: Fn(&Ensemble) -> Result<f64>,
{
    let fine = ensemble.try_map(|m| refine(m, 2))?;
    Ok((f(ensemble)? - f(&fine)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{shear_flow, taylor_green};
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn tg(n: usize) -> Ensemble {
        Ensemble::single(taylor_green(make_grid(2, n).unwrap()).unwrap())
    }

    #[test]
    fn global_energy_of_taylor_green() {
        assert!((global_energy(&tg(64), 0.0).unwrap() - PI * PI).abs() < 1e-10);
    }

    #[test]
    fn k1_residual_small_for_exact_solutions() {
        let e = tg(64);
        for mode in [
            SpatialMode::cos([1, 2, 0]),
            SpatialMode::sin([3, -1, 0]),
            SpatialMode::cos([4, 0, 0]),
        ] {
            for i in 0..2 {
                let r = weak_residual_k1(&e, &TestFunction::spatial(mode), i).unwrap();
                assert!(r.abs() < 1e-10, "{mode:?} {i} {r}");
            }
        }
    }

    #[test]
    fn separable_matches_general_quadrature() {
        let e = Ensemble::single(taylor_green(make_grid(2, 16).unwrap()).unwrap());
        let (x, y) = (SpatialMode::cos([1, 0, 0]), SpatialMode::sin([0, 1, 0]));
        let eta = (x, y);
        for (i, j) in [(0, 0), (0, 1), (1, 0)] {
            let a = weak_residual_k2(&e, &Phi2::Separable { time: None, x, y }, i, j).unwrap();
            let b = weak_residual_k2(
                &e,
                &Phi2::General {
                    time: None,
                    eta: &eta,
                },
                i,
                j,
            )
            .unwrap();
            assert!((a - b).abs() < 1e-11, "{a} {b}");
        }
    }

    #[test]
    fn cost_guard() {
        let e = tg(256);
        let eta = (SpatialMode::constant(), SpatialMode::constant());
        assert!(matches!(
            weak_residual_k2(
                &e,
                &Phi2::General {
                    time: None,
                    eta: &eta
                },
                0,
                0
            ),
            Err(Error::CostGuard { .. })
        ));
    }

    #[test]
    fn balance_identities() {
        let e = tg(64);
        let g = *e.grid();
        let m = Mollifier::new(g, 5.0 * g.spacing()).unwrap();
        let psi = TestFunction::spatial(SpatialMode::cos([1, 3, 0]));
        let b = five_term_balance(&e, &m, &psi).unwrap();
        assert!(b.sum.abs() < 1e-7, "{b:?}");
        assert_eq!(b.terms[0], 0.0);
        let d = dissipation_eps(&e, &m, &psi).unwrap();
        assert!(
            (b.a21 - d).abs() <= 1e-12 * d.abs().max(1e-300),
            "{} {d}",
            b.a21
        );
        let k2: f64 = (0..2)
            .map(|i| weak_residual_k2(&e, &Phi2::Mollified { mollifier: &m, psi }, i, i).unwrap())
            .sum();
        assert!((k2 - b.sum).abs() < 1e-12 * b.terms.iter().map(|t| t.abs()).fold(0.0, f64::max));
        let series = local_energy_residual(&e, &[m], &psi).unwrap();
        assert!((series[0] - b.rearranged_residual()).abs() < 1e-12 * b.lhs_weak.abs().max(1.0));
    }

    #[test]
    fn divergence_constraint() {
        let e = tg(64);
        let phi = DivTest {
            time: None,
            modes: vec![SpatialMode::sin([1, 1, 0])],
        };
        assert!(divfree_residual(&e, &phi, |_| 1.0, 1).unwrap().abs() < 1e-10);
        let phi2 = DivTest {
            time: None,
            modes: vec![SpatialMode::cos([1, 0, 0]), SpatialMode::sin([1, 1, 0])],
        };
        assert!(
            divfree_residual(&e, &phi2, |u| u.speed2(), 2)
                .unwrap()
                .abs()
                < 1e-8
        );

        // v = ∇(sin x sin y) carries the source ∇·v = -2 sin x sin y
        let g = make_grid(2, 64).unwrap();
        let coords = g.all_coords();
        let mut v: Vec<f64> = coords.iter().map(|x| x[0].cos() * x[1].sin()).collect();
        v.extend(coords.iter().map(|x| x[0].sin() * x[1].cos()));
        let grad = Ensemble::single(GridField::new(g, vec![0.0], v, None).unwrap());
        let probe = DivTest {
            time: None,
            modes: vec![SpatialMode::cos([1, 1, 0])],
        };
        let r = divfree_residual(&grad, &probe, |_| 1.0, 1).unwrap();
        assert!(r.abs() > 1e-3, "{r}");
    }

    #[test]
    fn shear_and_mixtures_are_linear() {
        let g = make_grid(2, 64).unwrap();
        let a = tg(64);
        let b = Ensemble::single(shear_flow(g, &[0.0, 1.0, 0.5]).unwrap());
        let psi = TestFunction::spatial(SpatialMode::cos([2, 1, 0]));
        let rb = weak_residual_k1(&b, &psi, 0).unwrap();
        assert!(rb.abs() < 1e-10);
        let w = 0.3;
        let mix = a.mixture(w, &b).unwrap();
        let ra = weak_residual_k1(&a, &psi, 0).unwrap();
        let rm = weak_residual_k1(&mix, &psi, 0).unwrap();
        assert!((rm - (w * ra + (1.0 - w) * rb)).abs() < 1e-14);
        let ea = global_energy(&a, 0.0).unwrap();
        let eb = global_energy(&b, 0.0).unwrap();
        assert!((global_energy(&mix, 0.0).unwrap() - (w * ea + (1.0 - w) * eb)).abs() < 1e-12);
    }
}
