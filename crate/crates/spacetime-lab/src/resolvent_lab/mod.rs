//! Resolvent solves with an absorbing collar and the estimates built on them.

pub mod cap;
pub mod inequality;
pub mod lap;
pub mod lattice;
pub mod mourre;
pub mod power;
pub mod radiation;
pub mod schwartz;
pub mod solve;

use thiserror::Error;

use crate::grid_calculus::GridError;

pub use cap::CapSpec;
pub use inequality::{local_compactness_test, subelliptic_test, InequalityFit, StabilityVerdict, TrialFunction};
pub use lap::{flat_lattice_reference, holder_fit, interior_weight, lap_sweep, ResolventSweep};
pub use lattice::{lattice_green, lattice_resolvent_apply, lattice_weighted_norm};
pub use mourre::{commutator_matrix, flat_bracket_infimum, mourre_experiment, MourreReport};
pub use power::{operator_norm, NormEstimate, PowerOptions};
pub use radiation::{radiation_condition_test, RadiationReport, RadiationSpec};
pub use schwartz::{schwartz_preservation_diagnostic, SchwartzRow, SchwartzTable};
pub use solve::{solve_resolvent, ShiftedSystem};

#[derive(Debug, Error)]
pub enum ResolventError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("shifted system is numerically singular (relative residual {residual:.3e}, condition ≳ {cond_estimate:.3e})")]
    SingularSystem { residual: f64, cond_estimate: f64 },
    #[error("power iteration did not settle after {iterations} steps (estimate {estimate:.6e}, last change {last_change:.3e})")]
    PowerIterationStall { iterations: usize, estimate: f64, last_change: f64 },
    #[error("{n} unknowns exceed the dense limit {max}")]
    Size { n: usize, max: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("io: {0}")]
    Io(String),
}
