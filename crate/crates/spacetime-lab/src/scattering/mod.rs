//! Cauchy evolutions, wave operators, boundary functionals at `t → ±∞` and
//! the inverse of `P + m₀²` they select, compared with the outgoing
//! resolvent.

pub mod asymptotic;
pub mod boundary;
pub mod compare;
pub mod conformal;
pub mod evolve;
pub mod feynman;
pub mod free;
pub mod line;
pub mod wave;

use thiserror::Error;

use crate::grid_calculus::GridError;
use crate::resolvent_lab::ResolventError;

pub use asymptotic::{extract_asymptotic_data, AsymptoticData, FitWindow};
pub use boundary::{rho_f, rho_fbar, BoundaryValue};
pub use compare::{compare_feynman_resolvent, ComparisonReport, ComparisonSpec};
pub use conformal::{conformal_identity_residual, conformal_reduce, reduced_apply, ConformalResidual, ReducedCoefficients};
pub use evolve::{evolve, lattice_index, Evolution, EvolutionKind, SolutionRecord, CFL_LIMIT};
pub use feynman::{default_gamma, feynman_inverse, BoundaryMapSolver, FeynmanSolution};
pub use free::{boundary_projectors, free_evolve, pi_projector, FreePropagator, Sign};
pub use line::{CauchyDatum, LineFft, LineGrid};
pub use wave::{wave_operator_inverse, CookReport};

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("field is not of product form")]
    NotProductForm,
    #[error("step violates the CFL bound at t = {time}: number {number:.4} ≥ 1")]
    CflViolation { time: f64, number: f64 },
    #[error("no convergence up to T = {t_max} (increments {increments:?})")]
    NotConverged { t_max: f64, increments: Vec<f64> },
    #[error("boundary map is numerically singular (condition {cond:.3e})")]
    SingularBoundaryMap { cond: f64 },
    #[error("fit window too short: {0}")]
    WindowTooShort(String),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("io: {0}")]
    Io(String),
}
