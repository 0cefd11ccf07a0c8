//! Metric fields, the principal symbol and sampled symbol inequalities.

pub mod checks;
pub mod cutoff;
pub mod field;
pub mod region;
pub mod sampling;
pub mod symbol;
pub mod weight;

pub use checks::{accposi_radius, incoming_ellipticity_check, verify_accposi, AccposiReport, EllipticityReport};
pub use cutoff::{build_cutoff_family, verify_cutoff_family, CutoffCase, CutoffError, CutoffFamily, CutoffParams, CutoffReport, CutoffValues};
pub use field::{make_perturbed_minkowski, verify_symbol_decay, DecayLattice, DecayReport, InverseMetricField, MetricError, MetricSpec};
pub use region::{RegionKind, RegionSpec};
pub use symbol::{
    beta, beta0, conjugate_bracket, conjugate_symbol, eval_symbol, flat_symbol, hamilton_field, hp_beta, jap, PhasePoint, SymbolError,
    CONJUGATE_BRACKET_CONSTANT,
};
pub use weight::{hp_weight, verify_weight_inequality, weight_lambda, InequalityReport, WeightCase, WeightSpec};
