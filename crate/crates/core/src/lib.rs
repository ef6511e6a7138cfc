//! Minimum-radius enclosing polyellipsoids.
//!
//! Given demand points `A`, foci `U` with weights `ω` and a norm, find the
//! translation `x` minimizing `max_{a∈A} Σ_u ω_u ‖a − u − x‖`.

mod config;
pub mod decomp;
mod error;
pub mod foci_select;
pub mod minimax;
pub mod model;
pub mod norms;
pub mod onedim;
pub mod ordered_median;
pub mod points;
mod smooth;
pub mod weber;

pub use config::{DecompMode, SolverConfig};
pub use decomp::{solve_decomposition, solve_decomposition_from, solve_subset, DecompOutcome, DecompStep, DecompTrace};
pub use error::{Error, Result};
pub use foci_select::{solve_foci_selection, solve_restricted, Exclusion, SelectionOutcome, SelectionProblem, SelectionState};
pub use minimax::{project_simplex, solve_direct, solve_lagrangean, translate_invariance_check, LagrangeanOutcome};
pub use model::{DualCertificate, Instance, Solution};
pub use norms::NormSpec;
pub use onedim::{consistent_pairs, polyellipse_interval, solve_1d, Branch1D, Interval1D, Solution1D};
pub use ordered_median::{om_objective, om_rearrangement_check, om_subgradient, om_value, solve_om, OrderedSpec};
pub use points::PointSet;
