//! Weighted resolvent norms `‖⟨x⟩^{−s}(P_h − iW − λ − iε)^{−1}⟨x⟩^{−s}‖`
//! along a decreasing sequence of `ε`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cap::CapSpec;
use super::lattice::lattice_weighted_norm;
use super::power::{operator_norm, NormEstimate, PowerOptions};
use super::solve::ShiftedSystem;
use super::ResolventError;
use crate::grid_calculus::{GridOperator, SpacetimeGrid};
use crate::Complex64;

/// Relative spread over the last three norms below which a sweep counts as
/// stabilised.
pub const STABILIZATION_SPREAD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub lambda: f64,
    pub s: f64,
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `α` in `|N(ε_k) − N(ε_{k+1})| ≈ C ε_k^α`, when at least two nonzero
    /// differences are available.
    pub holder_exponent: Option<f64>,
    pub holder_constant: Option<f64>,
    /// `max/min − 1` over the last three norms.
    pub spread: f64,
    pub stabilized: bool,
    /// Set for `s ≤ 1/2`, where no uniform bound is expected.
    pub below_half: bool,
}

/// `⟨x⟩^{−s}` on the absorber-free disc, zero in the collar.
pub fn interior_weight(grid: &SpacetimeGrid, cap: &CapSpec, s: f64) -> Vec<f64> {
    cap.interior(grid)
        .iter()
        .enumerate()
        .map(|(k, &inside)| {
            let x = grid.point(k);
            if inside {
                (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-0.5 * s)
            } else {
                0.0
            }
        })
        .collect()
}

/// Least-squares slope of `log d` against `log ε`, with the matching
/// prefactor.
pub fn holder_fit(eps: &[f64], norms: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(norms.windows(2))
        .filter_map(|(e, w)| {
            let d = (w[0] - w[1]).abs();
            (d > 0.0).then(|| (e.ln(), d.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

fn spread_of_tail(norms: &[f64]) -> f64 {
    if norms.len() < 3 {
        return f64::INFINITY;
    }
    let tail = &norms[norms.len() - 3..];
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo - 1.0
}

fn weighted_norm_at(p: &GridOperator, absorber: &[f64], weight: &[f64], z: Complex64, opts: &PowerOptions) -> Result<NormEstimate, ResolventError> {
    let sys = ShiftedSystem::with_absorber(p, absorber, z)?;
    let mul = |v: &[Complex64]| -> Vec<Complex64> { v.iter().zip(weight).map(|(a, w)| a * w).collect() };
    operator_norm(sys.dim(), |v| Ok(mul(&sys.solve(&mul(v))?)), |v| Ok(mul(&sys.solve_adjoint(&mul(v))?)), opts)
}

/// Runs the sweep. `eps` must be positive and strictly decreasing.
pub fn lap_sweep(p: &GridOperator, cap: &CapSpec, lambda: f64, s: f64, eps: &[f64], opts: &PowerOptions) -> Result<ResolventSweep, ResolventError> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(ResolventError::Precondition("need a finite λ ≠ 0".into()));
    }
    if !(s > 0.0) {
        return Err(ResolventError::Precondition("need s > 0".into()));
    }
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ResolventError::Precondition("ε list must be positive and strictly decreasing".into()));
    }
    cap.validate(&p.grid)?;
    let absorber = cap.absorber(&p.grid);
    let weight = interior_weight(&p.grid, cap, s);
    let runs = crate::par::map_slice(eps, |&e| weighted_norm_at(p, &absorber, &weight, Complex64::new(lambda, e), opts));
    let runs: Vec<NormEstimate> = runs.into_iter().collect::<Result<_, _>>()?;
    let norms: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let fit = holder_fit(eps, &norms);
    let spread = spread_of_tail(&norms);
    Ok(ResolventSweep {
        lambda,
        s,
        eps: eps.to_vec(),
        iterations: runs.iter().map(|r| r.iterations).collect(),
        holder_exponent: fit.map(|f| f.0),
        holder_constant: fit.map(|f| f.1),
        stabilized: spread < STABILIZATION_SPREAD,
        spread,
        below_half: s <= 0.5,
        norms,
    })
}

/// The same weighted norm for the flat operator on the infinite lattice at
/// `λ + i0`, with the weight restricted to the absorber-free disc.
pub fn flat_lattice_reference(grid: &SpacetimeGrid, cap: &CapSpec, lambda: f64, s: f64, opts: &PowerOptions) -> Result<f64, ResolventError> {
    let weight = interior_weight(grid, cap, s);
    Ok(lattice_weighted_norm(grid, Complex64::new(lambda, 0.0), &weight, opts)?.value)
}

impl ResolventSweep {
    /// Columns `eps, norm, difference, fit`.
    pub fn write_csv(&self, path: &Path) -> Result<(), ResolventError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| ResolventError::Io(e.to_string()))?;
        w.write_record(["eps", "norm", "difference", "fit"]).map_err(|e| ResolventError::Io(e.to_string()))?;
        for (k, (e, n)) in self.eps.iter().zip(&self.norms).enumerate() {
            let diff = self.norms.get(k + 1).map(|m| (n - m).abs());
            let fit = match (self.holder_exponent, self.holder_constant) {
                (Some(a), Some(c)) => Some(c * e.powf(a)),
                _ => None,
            };
            let cell = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
            w.write_record([format!("{e:.6e}"), format!("{n:.10e}"), cell(diff), cell(fit)]).map_err(|e| ResolventError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| ResolventError::Io(e.to_string()))?;
        Ok(())
    }
}
