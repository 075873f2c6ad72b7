use std::fmt::Write as _;

use onsager_core::budget::doubling_floor;
use onsager_core::container::read_container_with_meta;
use onsager_core::dissipation::{dissipation_report_with, VerdictConfig};
use onsager_core::grid::EXTENT;
use onsager_core::{
    check_axioms, divfree_residual, fit_exponent, five_term_balance, global_energy,
    local_energy_residual, mixed_dc, onsager_indicator, structure_function, weak_residual_k1,
    weak_residual_k2, BalanceBreakdown, DivTest, Ensemble, EpsLadder, Grid, Mollifier, Phi2,
    PointValue, Profile, SpatialMode, StructureFunctionCurve, TestFunction,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{manifest, mode_tag, write_manifest, Outputs};
use crate::{Analysis, AnalyzeArgs, Failure, ProfileArg};

const DEFAULT_RESIDUAL_MODES: [&str; 4] = ["cos:1,0", "sin:0,1", "cos:1,1", "cos:1,3"];
const ROUNDOFF: f64 = 1e-12;

pub fn run(analysis: &Analysis, threads: usize) -> Result<(), Failure> {
    let args = analysis.args();
    let (ensemble, meta) = read_container_with_meta(&args.input)?;
    ensemble
        .members()
        .iter()
        .try_for_each(|m| m.check_finite())?;
    let ladder = ladder(args, ensemble.grid())?;
    let mut out = Outputs::new(&args.out_dir)?;
    let details = match analysis {
        Analysis::Validate(_) => validate(&ensemble, &ladder, &mut out)?,
        Analysis::Structure(_) => structure(&ensemble, &ladder, args, &mut out)?,
        Analysis::MixedDc(_) => mixed(&ensemble, &ladder, args, &mut out)?,
        Analysis::Onsager(_) => onsager(&ensemble, &ladder, args, &mut out)?,
        Analysis::Dissipation(_) => dissipation(&ensemble, &ladder, args, &mut out)?,
        Analysis::Balance(_) => balance(&ensemble, &ladder, args, &mut out)?,
        Analysis::Residuals(_) => residuals(&ensemble, &ladder, args, &mut out)?,
        Analysis::Energy(_) => energy(&ensemble, &ladder, args, &mut out)?,
    };
    let extra = json!({
        "input": { "members": meta.members, "n": meta.n, "dim": meta.dim, "snapshots": meta.snapshots,
                   "generator": meta.generator, "seed": meta.seed, "alpha": meta.alpha },
        "ladder": ladder.eps(),
        "result": details,
    });
    let record = manifest(analysis.name(), analysis, threads, out.files(), extra);
    write_manifest(&args.out_dir.join("manifest.json"), &record)?;
    Ok(())
}

fn ladder(args: &AnalyzeArgs, grid: &Grid) -> Result<EpsLadder, Failure> {
    if args.eps_min.is_none() && args.eps_max.is_none() && args.eps_count.is_none() {
        return Ok(EpsLadder::dyadic(grid));
    }
    let min = args.eps_min.unwrap_or(3.0 * grid.spacing());
    let max = args.eps_max.unwrap_or(EXTENT / 8.0);
    Ok(EpsLadder::geometric(min, max, args.eps_count.unwrap_or(5))?)
}

fn modes(args: &AnalyzeArgs, default: &[&str]) -> Result<Vec<SpatialMode>, Failure> {
    let given: Vec<&str> = if args.psi_mode.is_empty() {
        default.to_vec()
    } else {
        args.psi_mode.iter().map(String::as_str).collect()
    };
    Ok(given
        .into_iter()
        .map(SpatialMode::parse)
        .collect::<Result<_, _>>()?)
}

fn profile(args: &AnalyzeArgs) -> Profile {
    match args.profile {
        ProfileArg::Bump => Profile::Bump,
        ProfileArg::QuarticSpline => Profile::QuarticSpline,
    }
}

fn q_tag(q: f64) -> String {
    format!("q{q}")
}

fn fitted(
    ensemble: &Ensemble,
    q: f64,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
) -> Result<StructureFunctionCurve, Failure> {
    let mut curve = structure_function(ensemble, q, ladder)?;
    if let Some(w) = &args.window {
        let window = (w[0], w[1]);
        if window.0 >= window.1 || window.1 >= curve.eps.len() {
            return Err(Failure::usage(format!(
                "fit window {},{} is not inside the {}-rung ladder",
                w[0],
                w[1],
                curve.eps.len()
            )));
        }
        curve.window = Some(window);
        (curve.alpha_fit, curve.residual) = match fit_exponent(&curve, Some(window)) {
            Ok((a, r)) => (Some(a), Some(r)),
            Err(_) => (None, None),
        };
    }
    Ok(curve)
}

fn validate(ensemble: &Ensemble, ladder: &EpsLadder, out: &mut Outputs) -> Result<Value, Failure> {
    let report = check_axioms(ensemble, ladder)?;
    out.write_json(
        "axioms.json",
        &json!({ "all_ok": report.all_ok(), "report": report }),
    )?;
    println!(
        "axioms: symmetry {:.2e}, consistency {:.2e}, minkowski {}, dc monotone {}",
        report.symmetry_residual,
        report.consistency_residual,
        report.minkowski_ok,
        report.dc_monotone
    );
    Ok(json!({ "all_ok": report.all_ok() }))
}

#[derive(Serialize)]
struct CurveReport<'a> {
    #[serde(flatten)]
    curve: &'a StructureFunctionCurve,
    minkowski_ok: bool,
}

fn structure(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let curve = fitted(ensemble, args.q, ladder, args)?;
    let tag = q_tag(args.q);
    out.write(&format!("structure_{tag}.csv"), &curve.to_csv())?;
    out.write_json(
        &format!("structure_{tag}.json"),
        &CurveReport {
            curve: &curve,
            minkowski_ok: curve.minkowski_ok(),
        },
    )?;
    if args.plot {
        out.write(&format!("structure_{tag}.dat"), &curve.to_dat())?;
    }
    println!(
        "structure function q = {}: fitted exponent {:?}",
        args.q, curve.alpha_fit
    );
    Ok(json!({ "alpha_fit": curve.alpha_fit }))
}

fn mixed(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let dc = mixed_dc(ensemble, ladder)?;
    let mut csv = String::from("eps,velocity_q2,velocity_q3,pressure_q1.5,total\n");
    for j in 0..dc.total.len() {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            dc.velocity_q2.eps[j],
            dc.velocity_q2.values[j],
            dc.velocity_q3.values[j],
            dc.pressure_q15.values[j],
            dc.total[j]
        );
    }
    out.write("mixed_dc.csv", &csv)?;
    out.write_json("mixed_dc.json", &dc)?;
    if args.plot {
        for c in [&dc.velocity_q2, &dc.velocity_q3] {
            out.write(
                &format!("mixed_dc_velocity_{}.dat", q_tag(c.q)),
                &c.to_dat(),
            )?;
        }
        out.write("mixed_dc_pressure_q1.5.dat", &dc.pressure_q15.to_dat())?;
    }
    let fits = json!({
        "velocity_q2": dc.velocity_q2.alpha_fit,
        "velocity_q3": dc.velocity_q3.alpha_fit,
        "pressure_q1.5": dc.pressure_q15.alpha_fit,
    });
    println!("mixed diagonal continuity: fitted exponents {fits}");
    Ok(fits)
}

fn onsager(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let curve = fitted(ensemble, 3.0, ladder, args)?;
    let indicator = onsager_indicator(&curve)?;
    out.write("onsager.csv", &indicator.to_csv())?;
    out.write_json(
        "onsager.json",
        &json!({ "indicator": indicator, "alpha_fit": curve.alpha_fit, "window": curve.window }),
    )?;
    if args.plot {
        let mut dat = String::from("# eps d_eps^3^3/eps\n");
        for (e, v) in indicator.eps.iter().zip(&indicator.values) {
            let _ = writeln!(dat, "{e:.16e} {v:.16e}");
        }
        out.write("onsager.dat", &dat)?;
    }
    println!(
        "onsager indicator: {:?} (trend slope {:?})",
        indicator.verdict, indicator.trend_slope
    );
    Ok(json!({ "verdict": indicator.verdict, "trend_slope": indicator.trend_slope }))
}

fn dissipation(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let mut summary = Vec::new();
    for mode in modes(args, &["m0"])? {
        let psi = TestFunction::spatial(mode);
        let report = dissipation_report_with(
            ensemble,
            ladder,
            &psi,
            profile(args),
            &VerdictConfig::default(),
        )?;
        let tag = mode_tag(&mode.label());
        out.write(
            &format!("dissipation_{tag}.json"),
            &(report.to_json() + "\n"),
        )?;
        out.write(&format!("dissipation_{tag}.csv"), &report.to_csv())?;
        if args.plot {
            let mut dat = String::from("# eps E_eps\n");
            for (e, v) in report.eps.iter().zip(&report.value) {
                let _ = writeln!(dat, "{e:.16e} {v:.16e}");
            }
            out.write(&format!("dissipation_{tag}.dat"), &dat)?;
        }
        println!(
            "dissipation psi = {}: {:?} (tail slope {:?}, {} bound violations)",
            report.psi, report.verdict, report.slope, report.bound_violations
        );
        summary.push(
            json!({ "psi": report.psi, "verdict": report.verdict, "slope": report.slope,
                             "bound_violations": report.bound_violations }),
        );
    }
    Ok(Value::Array(summary))
}

#[derive(Serialize)]
struct BalanceRow {
    #[serde(flatten)]
    breakdown: BalanceBreakdown,
    /// Larger of the resolution-doubling change of `sum` and its roundoff
    /// level `1e-12 abs_sum`.
    floor: f64,
}

fn balance(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let grid = *ensemble.grid();
    let mut summary = Vec::new();
    for mode in modes(args, &["m0"])? {
        let psi = TestFunction::spatial(mode);
        let mut rows = Vec::new();
        let mut csv = String::from("eps,A1,A2,A3,A4,A5,A11,A12,A21,A22,sum,floor\n");
        for &eps in ladder.eps() {
            let moll = Mollifier::with_profile(grid, eps, profile(args))?;
            let b = five_term_balance(ensemble, &moll, &psi)?;
            let doubled = doubling_floor(ensemble, |e| {
                let m = Mollifier::with_profile(*e.grid(), eps, profile(args))?;
                Ok(five_term_balance(e, &m, &psi)?.sum)
            })?;
            let floor = doubled.max(ROUNDOFF * b.abs_sum);
            let _ = write!(csv, "{eps:.16e}");
            for v in b
                .terms
                .iter()
                .chain(&[b.a11, b.a12, b.a21, b.a22, b.sum, floor])
            {
                let _ = write!(csv, ",{v:.16e}");
            }
            csv.push('\n');
            rows.push(BalanceRow {
                breakdown: b,
                floor,
            });
        }
        let tag = mode_tag(&mode.label());
        out.write(&format!("balance_{tag}.csv"), &csv)?;
        out.write_json(&format!("balance_{tag}.json"), &rows)?;
        let within = rows
            .iter()
            .filter(|r| r.breakdown.sum.abs() <= r.floor)
            .count();
        println!(
            "balance psi = {}: {within}/{} rungs with |sum| <= floor",
            mode.label(),
            rows.len()
        );
        summary.push(json!({ "psi": mode.label(), "rungs": rows.len(), "within_floor": within }));
    }
    Ok(Value::Array(summary))
}

fn residuals(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let grid = *ensemble.grid();
    let dim = grid.dim();
    let mut csv = String::from("phi_mode,i,j,eps,residual,floor\n");
    let mut div = String::from("phi_mode,k,residual,floor\n");
    let mut worst: f64 = 0.0;
    for mode in modes(args, &DEFAULT_RESIDUAL_MODES)? {
        let psi = TestFunction::spatial(mode);
        // labels carry commas
        let label = format!("\"{}\"", mode.label());
        for i in 0..dim {
            let r = weak_residual_k1(ensemble, &psi, i)?;
            let floor = doubling_floor(ensemble, |e| weak_residual_k1(e, &psi, i))?;
            worst = worst.max(r.abs());
            let _ = writeln!(csv, "{label},{i},,,{r:.16e},{floor:.16e}");
        }
        for &eps in ladder.eps() {
            let moll = Mollifier::with_profile(grid, eps, profile(args))?;
            for i in 0..dim {
                for j in 0..dim {
                    let phi = Phi2::Mollified {
                        mollifier: &moll,
                        psi,
                    };
                    let r = weak_residual_k2(ensemble, &phi, i, j)?;
                    let floor = doubling_floor(ensemble, |e| {
                        let m = Mollifier::with_profile(*e.grid(), eps, profile(args))?;
                        weak_residual_k2(e, &Phi2::Mollified { mollifier: &m, psi }, i, j)
                    })?;
                    worst = worst.max(r.abs());
                    let _ = writeln!(csv, "{label},{i},{j},{eps:.16e},{r:.16e},{floor:.16e}");
                }
            }
        }
        let tests = [
            (
                1,
                DivTest {
                    time: None,
                    modes: vec![mode],
                },
            ),
            (
                2,
                DivTest {
                    time: None,
                    modes: vec![mode, mode],
                },
            ),
        ];
        for (k, phi) in tests {
            let kappa = |u: &PointValue| u.speed2();
            let r = divfree_residual(ensemble, &phi, kappa, k)?;
            let floor = doubling_floor(ensemble, |e| divfree_residual(e, &phi, kappa, k))?;
            let _ = writeln!(div, "{label},{k},{r:.16e},{floor:.16e}");
        }
    }
    out.write("residuals.csv", &csv)?;
    out.write("divfree.csv", &div)?;
    println!("weak residuals: largest |residual| {worst:.3e}");
    Ok(json!({ "max_abs_residual": worst }))
}

fn energy(
    ensemble: &Ensemble,
    ladder: &EpsLadder,
    args: &AnalyzeArgs,
    out: &mut Outputs,
) -> Result<Value, Failure> {
    let grid = *ensemble.grid();
    let mut csv = String::from("t,energy\n");
    let mut energies = Vec::new();
    for &t in ensemble.times() {
        let e = global_energy(ensemble, t)?;
        let _ = writeln!(csv, "{t:.16e},{e:.16e}");
        energies.push(e);
    }
    out.write("energy.csv", &csv)?;
    let mut local = Vec::new();
    if ensemble.has_pressure() {
        for mode in modes(args, &["m0"])? {
            let psi = TestFunction::spatial(mode);
            let mollifiers = ladder
                .eps()
                .iter()
                .map(|&eps| Mollifier::with_profile(grid, eps, profile(args)))
                .collect::<Result<Vec<_>, _>>()?;
            let series = local_energy_residual(ensemble, &mollifiers, &psi)?;
            let mut rows = String::from("eps,residual,floor\n");
            for (&eps, r) in ladder.eps().iter().zip(&series) {
                let floor = doubling_floor(ensemble, |e| {
                    let m = Mollifier::with_profile(*e.grid(), eps, profile(args))?;
                    Ok(local_energy_residual(e, &[m], &psi)?[0])
                })?;
                let _ = writeln!(rows, "{eps:.16e},{r:.16e},{floor:.16e}");
            }
            out.write(
                &format!("local_energy_{}.csv", mode_tag(&mode.label())),
                &rows,
            )?;
            local.push(json!({ "psi": mode.label(), "series": series }));
        }
    }
    let spread = energies.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e))
        - energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    out.write_json(
        "energy.json",
        &json!({ "times": ensemble.times(), "energy": energies, "spread": spread, "local": local }),
    )?;
    println!(
        "global energy {:.12e} (spread over snapshots {spread:.2e})",
        energies[0]
    );
    Ok(json!({ "energy": energies[0], "spread": spread }))
}
