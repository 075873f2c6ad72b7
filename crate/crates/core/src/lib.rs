//! Empirical statistical solutions of the incompressible Euler equations on
//! the periodic box `[0, 2π)^d`.
//!
//! An [`Ensemble`] is a weighted family of sampled velocity (and pressure)
//! fields. Its correlation hierarchy is atomic per member, so every k-point
//! statistic is a weighted sum over members. On top of that the crate
//! computes structure functions, the mollified dissipation functional, the
//! five-term regularized energy balance, weak-form residuals and the
//! Onsager-exponent indicator.

pub mod budget;
pub mod container;
pub mod dissipation;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
mod kernel;
pub mod mollifier;
pub mod regularity;
pub mod spectral;
pub mod structure;
pub mod testfn;

pub use budget::{
    divfree_residual, five_term_balance, global_energy, local_energy_residual, weak_residual_k1,
    weak_residual_k2, BalanceBreakdown, DivTest, PairTest, Phi2,
};
pub use container::{read_container, write_container, ContainerMeta};
pub use dissipation::{
    dissipation_eps, dissipation_report, structure_flux, DissipationReport, Verdict,
};
pub use ensemble::{check_axioms, make_ensemble, moment, AxiomReport, Ensemble, PointValue};
pub use error::{Error, Result};
pub use field::{random_besov_field, shear_flow, taylor_green, BesovBand, GridField};
pub use grid::{make_grid, Grid};
pub use kernel::ball_offsets;
pub use mollifier::{mollify, Mollifier, Profile};
pub use regularity::{fit_exponent, onsager_indicator, OnsagerIndicator, OnsagerVerdict};
pub use spectral::{leray_project, refine, solve_pressure, spectral_divergence, truncated_copy};
pub use structure::{mixed_dc, structure_function, EpsLadder, MixedDc, StructureFunctionCurve};
pub use testfn::{SpatialMode, TestFunction, TimeBump};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
