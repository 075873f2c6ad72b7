use onsager_core::field::{random_besov_members, BesovBand};
use onsager_core::grid::EXTENT;
use onsager_core::*;

fn rough(n: usize, alpha: f64, k_max: f64, seed: u64, members: usize) -> Ensemble {
    let g = make_grid(2, n).unwrap();
    let band = BesovBand {
        alpha,
        k_min: 2.0,
        k_max,
    };
    let fields = random_besov_members(g, band, seed, members).unwrap();
    make_ensemble(
        fields
            .into_iter()
            .map(|f| f.with_solved_pressure().unwrap())
            .collect(),
        None,
    )
    .unwrap()
}

fn constant(n: usize, v: [f64; 2], p: f64) -> Ensemble {
    let g = make_grid(2, n).unwrap();
    let mut vel = vec![v[0]; g.len()];
    vel.extend(vec![v[1]; g.len()]);
    Ensemble::single(GridField::new(g, vec![0.0], vel, Some(vec![p; g.len()])).unwrap())
}

#[test]
fn besov_exponents_at_n256() {
    let e = rough(256, 0.45, 64.0, 1, 1);
    let ladder = EpsLadder::dyadic(e.grid());
    let a2 = structure_function(&e, 2.0, &ladder)
        .unwrap()
        .alpha_fit
        .unwrap();
    assert!((0.40..=0.50).contains(&a2), "q = 2 fit {a2}");
}

#[test]
fn rough_ensemble_exponent_at_n256() {
    let r = rough(256, 0.25, 256.0 / 3.0, 7, 8);
    let a = structure_function(&r, 3.0, &EpsLadder::dyadic(r.grid()))
        .unwrap()
        .alpha_fit
        .unwrap();
    assert!((0.20..=0.30).contains(&a), "alpha 0.25 fit {a}");
}

#[test]
fn pressure_exponent_is_not_worse_than_velocity() {
    let e = rough(128, 0.4, 128.0 / 3.0, 3, 2);
    let h = e.grid().spacing();
    let ladder = EpsLadder::geometric(8.0 * h, 32.0 * h, 4).unwrap();
    let dc = mixed_dc(&e, &ladder).unwrap();
    let (p, v) = (
        dc.pressure_q15.alpha_fit.unwrap(),
        dc.velocity_q3.alpha_fit.unwrap(),
    );
    assert!(p >= v - 0.15, "pressure {p} velocity {v}");
}

#[test]
fn k2_symmetric_under_swapping_points() {
    let e = rough(32, 0.5, 8.0, 4, 3);
    let mode = SpatialMode::cos([1, 2, 0]);
    let phi = Phi2::Separable {
        time: None,
        x: mode,
        y: mode,
    };
    let a = weak_residual_k2(&e, &phi, 0, 1).unwrap();
    let b = weak_residual_k2(&e, &phi, 1, 0).unwrap();
    assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300), "{a} {b}");
}

/// Direct single-field weak form `Σ_x v^i ∂_tφ + v^i v·∇φ + p ∂_iφ` on a
/// frozen snapshot, with the bump integral as time weight.
fn single_field_k1(field: &GridField, mode: SpatialMode, i: usize) -> f64 {
    let g = field.grid();
    let bump = TestFunction::spatial(mode).bump_for(field.times());
    let p = field.pressure(0).unwrap();
    let mut total = 0.0;
    for x in 0..g.len() {
        let c = g.coords(x);
        let grad = mode.gradient(&c[..2]);
        let v = [field.component(0, 0)[x], field.component(0, 1)[x]];
        total += v[i] * (v[0] * grad[0] + v[1] * grad[1]) + p[x] * grad[i];
    }
    total * bump.integral() * g.cell_volume()
}

#[test]
fn atomic_k1_matches_direct_weak_form() {
    let e = rough(32, 0.3, 10.0, 8, 1);
    for mode in [SpatialMode::sin([1, 0, 0]), SpatialMode::cos([2, -1, 0])] {
        for i in 0..2 {
            let r = weak_residual_k1(&e, &TestFunction::spatial(mode), i).unwrap();
            let direct = single_field_k1(&e.members()[0], mode, i);
            assert!(
                (r - direct).abs() <= 1e-13 * direct.abs().max(1.0),
                "{r} {direct}"
            );
        }
    }
}

#[test]
fn steady_energy_is_time_independent() {
    let tg = taylor_green(make_grid(2, 64).unwrap()).unwrap();
    let e = Ensemble::single(tg.steady(vec![0.0, 0.3, 0.7, 1.0]).unwrap());
    for &t in e.times() {
        let en = global_energy(&e, t).unwrap();
        assert!((en - std::f64::consts::PI.powi(2)).abs() < 1e-10);
    }
    assert!(global_energy(&constant(16, [0.0, 0.0], 0.0), 0.0).unwrap() == 0.0);
}

#[test]
fn constant_ensemble_is_inert() {
    let e = constant(32, [0.3, -1.2], 0.5);
    let g = *e.grid();
    let m = Mollifier::new(g, 4.0 * g.spacing()).unwrap();
    let psi = TestFunction::spatial(SpatialMode::cos([1, 1, 0]));
    let b = five_term_balance(&e, &m, &psi).unwrap();
    // terms with a mollifier gradient vanish exactly; the rest are trig sums of a constant
    assert!(b.terms.iter().all(|t| t.abs() < 1e-13), "{b:?}");
    assert_eq!(b.a21, 0.0);
    let series = local_energy_residual(&e, &[m], &psi).unwrap();
    assert!(series[0].abs() < 1e-13);
    let ladder = EpsLadder::dyadic(&g);
    assert!(structure_function(&e, 2.0, &ladder)
        .unwrap()
        .values
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn commutator_terms_shrink_with_diagonal_continuity() {
    // five different fields as snapshots so that the time-derivative split is nonzero
    let frames = rough(64, 0.6, 20.0, 2, 5);
    let g = *frames.grid();
    let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let (mut velocity, mut pressure) = (Vec::new(), Vec::new());
    for m in frames.members() {
        velocity.extend_from_slice(m.velocity());
        pressure.extend_from_slice(m.pressure_all().unwrap());
    }
    let e = Ensemble::single(GridField::new(g, times, velocity, Some(pressure)).unwrap());
    let h = g.spacing();
    let psi = TestFunction::spatial(SpatialMode::cos([1, 1, 0]));
    let eps = [16.0 * h, 8.0 * h, 4.0 * h];
    let parts: Vec<BalanceBreakdown> = eps
        .iter()
        .map(|&r| five_term_balance(&e, &Mollifier::new(g, r).unwrap(), &psi).unwrap())
        .collect();
    let slope = |v: &[f64]| (v[0].abs() / v[2].abs()).ln() / (eps[0] / eps[2]).ln();
    let dc = structure_function(&e, 2.0, &EpsLadder::new(eps.to_vec()).unwrap()).unwrap();
    let dc_rate = slope(&dc.values);
    let a12: Vec<f64> = parts.iter().map(|b| b.a12).collect();
    let a22: Vec<f64> = parts.iter().map(|b| b.a22).collect();
    assert!(
        slope(&a12) >= dc_rate,
        "A12 rate {} vs d rate {dc_rate}",
        slope(&a12)
    );
    assert!(
        slope(&a22) >= dc_rate,
        "A22 rate {} vs d rate {dc_rate}",
        slope(&a22)
    );
}

#[test]
fn mixture_energy_and_weights() {
    let g = make_grid(2, 32).unwrap();
    let a = Ensemble::single(taylor_green(g).unwrap());
    let b = Ensemble::single(shear_flow(g, &[0.0, 1.0]).unwrap());
    let m = a.mixture(0.25, &b).unwrap();
    let expect = 0.25 * global_energy(&a, 0.0).unwrap() + 0.75 * global_energy(&b, 0.0).unwrap();
    assert!((global_energy(&m, 0.0).unwrap() - expect).abs() < 1e-14 * expect);
    let eight = rough(32, 0.45, 10.0, 7, 8);
    assert!(eight.weights().iter().all(|&w| w == 0.125));
}

#[test]
fn ladder_defaults_match_the_grid() {
    let g = make_grid(2, 256).unwrap();
    let d = EpsLadder::dyadic(&g);
    assert_eq!(d.len(), 4);
    assert_eq!(d.eps()[0], EXTENT / 8.0);
    assert!(d.eps()[3] >= 3.0 * g.spacing());
}
