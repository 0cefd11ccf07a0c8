//! Numerical laboratory for the wave operator `P = -□_g + V` on
//! asymptotically Minkowski spacetimes in 1+1 dimensions.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric_symbols`] metric fields, the principal symbol and pointwise
//!   symbol inequalities checked on deterministic samples.
//! * [`hamilton_flow`] bicharacteristic integration, non-trapping
//!   certificates and the global escape function.
//! * [`grid_calculus`] spacetime grids, the discretised operator, grid Weyl
//!   quantization, weighted norms, spectral windows and Gabor probes.
//! * [`resolvent_lab`] resolvent solves with an absorbing potential and the
//!   estimates built on them (LAP sweeps, commutator positivity, ...).
//! * [`scattering`] Cauchy evolutions, wave operators, boundary functionals
//!   and the propagator built from them.
//! * [`lab`] declarative experiment configs, runners and reports.

pub mod grid_calculus;
pub mod hamilton_flow;
pub mod lab;
pub mod metric_symbols;
pub mod par;
pub mod resolvent_lab;
pub mod scattering;

/// Points and covectors of the 1+1 dimensional spacetime, ordered `(t, y)`.
pub type Vec2 = [f64; 2];

pub use num_complex::Complex64;
