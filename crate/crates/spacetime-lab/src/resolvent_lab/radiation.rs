//! Phase-space mass of an outgoing Klein–Gordon solution in the incoming
//! and outgoing mass-shell regions.

use serde::{Deserialize, Serialize};

use super::cap::CapSpec;
use super::solve::solve_resolvent;
use super::ResolventError;
use crate::grid_calculus::{gabor_masses, weighted_apply, GridFunction, GridOperator, Taper};
use crate::metric_symbols::{InverseMetricField, PhasePoint, RegionSpec};
use crate::Complex64;

/// A mass sequence decays when it strictly decreases and its last entry is
/// at most this fraction of its first.
pub const DECAY_FACTOR: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationSpec {
    pub m0: f64,
    /// Imaginary shift `ε` of `z = −m₀² + iε`.
    pub shift: f64,
    /// Width `ε` of the region in direction cosine and in `|p₀ + m₀²|/|ξ|²`.
    pub region_eps: f64,
    /// Increasing radii `R`.
    pub radii: Vec<f64>,
    pub delta: f64,
    /// Gabor window width.
    pub sigma: f64,
}

impl Default for RadiationSpec {
    fn default() -> Self {
        Self { m0: 1.0, shift: 1e-2, region_eps: 0.5, radii: vec![2.0, 4.0, 8.0], delta: 0.25, sigma: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationReport {
    pub radii: Vec<f64>,
    /// Mass of `⟨x⟩^{1/2−δ}u` in the incoming region, divided by its norm².
    pub incoming: Vec<f64>,
    pub outgoing: Vec<f64>,
    pub incoming_decays: bool,
    pub outgoing_decays: bool,
    pub pass: bool,
}

pub fn decays(m: &[f64]) -> bool {
    m.len() >= 2 && m.windows(2).all(|w| w[1] < w[0]) && m[m.len() - 1] <= DECAY_FACTOR * m[0]
}

/// Solves `(P_h + m₀² − iW − iε)u = f` and probes `⟨x⟩^{1/2−δ}u`.
pub fn radiation_condition_test(
    p: &GridOperator,
    field: &InverseMetricField,
    cap: &CapSpec,
    f: &GridFunction,
    spec: &RadiationSpec,
) -> Result<RadiationReport, ResolventError> {
    if !(spec.m0 > 0.0) {
        return Err(ResolventError::Precondition("need m₀ > 0".into()));
    }
    if spec.radii.windows(2).any(|w| w[1] <= w[0]) || spec.radii.is_empty() {
        return Err(ResolventError::Precondition("radii must increase".into()));
    }
    let z = Complex64::new(-spec.m0 * spec.m0, spec.shift);
    let u = solve_resolvent(p, cap, z, f)?;
    let v = weighted_apply(&u, 0.0, 0.5 - spec.delta, Taper::None);
    let total = v.norm().powi(2);
    let n = spec.radii.len();
    if total == 0.0 {
        let zeros = vec![0.0; n];
        return Ok(RadiationReport { radii: spec.radii.clone(), incoming: zeros.clone(), outgoing: zeros, incoming_decays: false, outgoing_decays: false, pass: false });
    }
    let regions: Vec<RegionSpec> = spec
        .radii
        .iter()
        .flat_map(|&r| [RegionSpec::mass_shell_incoming(spec.region_eps, r, spec.m0), RegionSpec::mass_shell_outgoing(spec.region_eps, r, spec.m0)])
        .collect();
    let tests: Vec<Box<dyn Fn(&PhasePoint) -> bool + Sync>> =
        regions.iter().map(|r| Box::new(move |pt: &PhasePoint| r.contains(field, pt)) as Box<dyn Fn(&PhasePoint) -> bool + Sync>).collect();
    let refs: Vec<&(dyn Fn(&PhasePoint) -> bool + Sync)> = tests.iter().map(|b| b.as_ref()).collect();
    let masses = gabor_masses(&v, spec.sigma, &refs)?;
    let incoming: Vec<f64> = (0..n).map(|k| masses[2 * k] / total).collect();
    let outgoing: Vec<f64> = (0..n).map(|k| masses[2 * k + 1] / total).collect();
    let (incoming_decays, outgoing_decays) = (decays(&incoming), decays(&outgoing));
    Ok(RadiationReport { radii: spec.radii.clone(), incoming, outgoing, incoming_decays, outgoing_decays, pass: incoming_decays && !outgoing_decays })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::{assemble_p, SpacetimeGrid};

    #[test]
    fn decay_rule() {
        assert!(decays(&[1.0, 0.6, 0.4]));
        assert!(!decays(&[1.0, 0.9, 0.8]));
        assert!(!decays(&[1.0, 0.3, 0.3]));
        assert!(!decays(&[1.0]));
    }

    #[test]
    fn zero_source_has_no_mass() {
        let g = SpacetimeGrid::square(8.0, 32).unwrap();
        let field = InverseMetricField::flat();
        let p = assemble_p(&field, &g).unwrap();
        let spec = RadiationSpec { m0: 1.0, shift: 1e-2, region_eps: 0.5, radii: vec![1.0, 2.0, 4.0], delta: 0.25, sigma: 1.0 };
        let r = radiation_condition_test(&p, &field, &CapSpec::default_for(&g), &GridFunction::zeros(g), &spec).unwrap();
        assert!(r.incoming.iter().chain(&r.outgoing).all(|m| *m == 0.0));
    }
}
