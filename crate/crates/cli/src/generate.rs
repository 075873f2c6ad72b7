use onsager_core::container::{write_container_with, Provenance};
use onsager_core::field::{random_besov_members, BesovBand};
use onsager_core::{make_ensemble, make_grid, shear_flow, taylor_green, GridField};
use serde_json::json;

use crate::output::{manifest, write_manifest};
use crate::{Failure, GenerateArgs, Generator};

pub fn run(args: &GenerateArgs, threads: usize) -> Result<(), Failure> {
    let grid = make_grid(args.dim, args.n)?;
    if args.members == 0 {
        return Err(Failure::usage("--members must be at least 1"));
    }
    if args.snapshots == 0 || !(args.t_end.is_finite() && args.t_end > 0.0) {
        return Err(Failure::usage(
            "--snapshots must be at least 1 and --t-end positive",
        ));
    }
    let (members, provenance) = match args.generator {
        Generator::TaylorGreen | Generator::Shear => {
            if args.members != 1 {
                return Err(Failure::usage(format!(
                    "the {:?} generator is deterministic and writes exactly one member (got --members {})",
                    args.generator, args.members
                )));
            }
            let (field, name) = if args.generator == Generator::TaylorGreen {
                (taylor_green(grid)?, "taylor-green")
            } else {
                (shear_flow(grid, &args.shear_modes)?, "shear")
            };
            let provenance = Provenance {
                seed: None,
                generator: Some(name.into()),
                alpha: None,
            };
            (vec![field], provenance)
        }
        Generator::RandomBesov => {
            let alpha = args.alpha.ok_or_else(|| {
                Failure::usage("random-besov needs --alpha in the open interval (0, 1)")
            })?;
            let band = BesovBand {
                alpha,
                k_min: args.k_min,
                k_max: args.k_max.unwrap_or(args.n as f64 / 3.0),
            };
            let fields = random_besov_members(grid, band, args.seed, args.members)?
                .into_iter()
                .map(GridField::with_solved_pressure)
                .collect::<Result<Vec<_>, _>>()?;
            let provenance = Provenance {
                seed: Some(args.seed),
                generator: Some("random-besov".into()),
                alpha: Some(alpha),
            };
            (fields, provenance)
        }
    };
    let members = if args.snapshots > 1 {
        let times: Vec<f64> = (0..args.snapshots)
            .map(|s| args.t_end * s as f64 / (args.snapshots - 1) as f64)
            .collect();
        members
            .iter()
            .map(|m| m.steady(times.clone()))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        members
    };
    let ensemble = make_ensemble(members, None)?;
    write_container_with(&ensemble, &args.out, &provenance)?;

    let mut record_path = args.out.clone().into_os_string();
    record_path.push(".manifest.json");
    let out = args.out.display().to_string();
    let record = manifest(
        "generate",
        args,
        threads,
        std::slice::from_ref(&out),
        json!({ "seed": provenance.seed, "members": ensemble.len(), "grid_points": ensemble.grid().len() }),
    );
    write_manifest(std::path::Path::new(&record_path), &record)?;
    println!(
        "wrote {} ({} member(s), n = {}, d = {})",
        out,
        ensemble.len(),
        args.n,
        args.dim
    );
    Ok(())
}
