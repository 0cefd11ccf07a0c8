//! Distance between the `ρ_F`-annihilated solution and the absorbing-collar
//! resolvent solutions along a sequence of `ε`.

use serde::{Deserialize, Serialize};

use super::feynman::{feynman_inverse, BoundaryMapSolver, FeynmanSolution};
use super::ScatteringError;
use crate::grid_calculus::{assemble_p, GridFunction};
use crate::metric_symbols::InverseMetricField;
use crate::resolvent_lab::{interior_weight, CapSpec, ShiftedSystem};
use crate::Complex64;

/// The incoming control counts as separated when its extrapolated distance
/// stays at least this large.
pub const CONTROL_FLOOR: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonSpec {
    /// Decreasing shifts `ε`.
    pub eps: Vec<f64>,
    /// Weight exponent of `L^{2,−s}`.
    pub s: f64,
    pub t_max: f64,
    /// Allowed `‖ρ_F^{(T/2)}u‖/‖ρ_0 u‖`.
    pub rho_tol: f64,
    /// Pass limit for the extrapolated outgoing distance.
    pub limit: f64,
    pub solver: BoundaryMapSolver,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        Self { eps: vec![0.08, 0.04, 0.02, 0.01], s: 0.6, t_max: 32.0, rho_tol: 0.05, limit: 1e-2, solver: BoundaryMapSolver::Dense }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub eps: Vec<f64>,
    /// `d(ε)` against `(P_h + m₀² − iW − iε)^{−1} f`.
    pub outgoing: Vec<f64>,
    /// `d(ε)` against `(P_h + m₀² + iW + iε)^{−1} f`.
    pub incoming: Vec<f64>,
    /// Distance to the linear extrapolation `ε → 0` of the last two
    /// resolvent solutions.
    pub outgoing_limit: f64,
    pub incoming_limit: f64,
    pub outgoing_decreasing: bool,
    pub control_separated: bool,
    pub pass: bool,
    pub residual: f64,
    pub rho_change: f64,
    pub cond: Option<f64>,
}

fn weighted(w: &[f64], a: &[Complex64], b: Option<&[Complex64]>) -> f64 {
    let s: f64 = match b {
        Some(b) => a.iter().zip(b).zip(w).map(|((x, y), w)| (w * (x - y)).norm_sqr()).sum(),
        None => a.iter().zip(w).map(|(x, w)| (w * x).norm_sqr()).sum(),
    };
    s.sqrt()
}

/// `(ε₁ v₂ − ε₂ v₁)/(ε₁ − ε₂)`.
fn extrapolate(e1: f64, v1: &[Complex64], e2: f64, v2: &[Complex64]) -> Vec<Complex64> {
    v1.iter().zip(v2).map(|(a, b)| (e1 * b - e2 * a) / (e1 - e2)).collect()
}

/// Runs the `ρ_F` construction and both resolvent families on the source
/// grid; distances use `⟨x⟩^{−s}` on the absorber-free disc.
pub fn compare_feynman_resolvent(field: &InverseMetricField, m0: f64, f: &GridFunction, cap: &CapSpec, spec: &ComparisonSpec) -> Result<(ComparisonReport, FeynmanSolution), ScatteringError> {
    if spec.eps.len() < 2 || spec.eps.windows(2).any(|w| !(w[1] < w[0])) || spec.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(ScatteringError::Precondition("need at least two positive, decreasing ε".into()));
    }
    let sol = feynman_inverse(field, m0, f, spec.t_max, spec.rho_tol, spec.solver)?;
    let grid = f.grid;
    let p = assemble_p(field, &grid)?;
    cap.validate(&grid)?;
    let w = interior_weight(&grid, cap, spec.s);
    let absorber = cap.absorber(&grid);
    let reversed: Vec<f64> = absorber.iter().map(|a| -a).collect();
    let scale = weighted(&w, &sol.u.values, None);
    if scale == 0.0 {
        return Err(ScatteringError::Precondition("solution vanishes on the comparison disc".into()));
    }
    let solves = crate::par::map_slice(&spec.eps, |&e| -> Result<[Vec<Complex64>; 2], ScatteringError> {
        let out = ShiftedSystem::with_absorber(&p, &absorber, Complex64::new(-m0 * m0, e))?.solve(&f.values)?;
        let inc = ShiftedSystem::with_absorber(&p, &reversed, Complex64::new(-m0 * m0, -e))?.solve(&f.values)?;
        Ok([out, inc])
    });
    let solves = solves.into_iter().collect::<Result<Vec<_>, _>>()?;
    let dist = |v: &[Complex64]| weighted(&w, &sol.u.values, Some(v)) / scale;
    let outgoing: Vec<f64> = solves.iter().map(|s| dist(&s[0])).collect();
    let incoming: Vec<f64> = solves.iter().map(|s| dist(&s[1])).collect();
    let n = spec.eps.len();
    let (e1, e2) = (spec.eps[n - 2], spec.eps[n - 1]);
    let outgoing_limit = dist(&extrapolate(e1, &solves[n - 2][0], e2, &solves[n - 1][0]));
    let incoming_limit = dist(&extrapolate(e1, &solves[n - 2][1], e2, &solves[n - 1][1]));
    let outgoing_decreasing = outgoing.windows(2).all(|w| w[1] < w[0]);
    let control_separated = incoming_limit >= CONTROL_FLOOR;
    let report = ComparisonReport {
        eps: spec.eps.clone(),
        outgoing,
        incoming,
        outgoing_limit,
        incoming_limit,
        outgoing_decreasing,
        control_separated,
        pass: outgoing_decreasing && outgoing_limit <= spec.limit && control_separated,
        residual: sol.residual,
        rho_change: if sol.rho.scale > 0.0 { sol.rho.change / sol.rho.scale } else { 0.0 },
        cond: sol.cond,
    };
    Ok((report, sol))
}
