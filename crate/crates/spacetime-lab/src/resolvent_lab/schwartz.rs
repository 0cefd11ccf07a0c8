//! Weighted norms `‖⟨x⟩^N ⟨D⟩^N u‖` of resolvent solutions for a rapidly
//! decaying source, tabulated on a grid and its doubling.

use serde::{Deserialize, Serialize};

use super::cap::CapSpec;
use super::solve::solve_resolvent;
use super::ResolventError;
use crate::grid_calculus::{assemble_p, fourier_multiplier, GridFunction, SpacetimeGrid, Taper};
use crate::metric_symbols::InverseMetricField;
use crate::{Complex64, Vec2};

/// Largest relative change across the doubling that still counts as stable.
pub const SCHWARTZ_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwartzRow {
    pub order: f64,
    pub coarse: f64,
    pub fine: f64,
    pub rel_change: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwartzTable {
    pub z: Complex64,
    pub source_norm: [f64; 2],
    pub rows: Vec<SchwartzRow>,
}

/// `⟨x⟩^N ⟨D⟩^N (T u)` with the default boundary taper `T`.
pub fn schwartz_seminorm(u: &GridFunction, order: f64) -> f64 {
    let taper = Taper::default();
    let g = u.grid;
    let tapered = u.map(|x, v| v * taper.eval(&g, x));
    let d = fourier_multiplier(&tapered, |t, y| Complex64::new((1.0 + t * t + y * y).powf(0.5 * order), 0.0));
    d.map(|x, v| v * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(0.5 * order)).norm()
}

pub fn schwartz_preservation_diagnostic(
    field: &InverseMetricField,
    coarse: &SpacetimeGrid,
    cap: &CapSpec,
    z: Complex64,
    source: impl Fn(Vec2) -> Complex64,
    orders: &[f64],
) -> Result<SchwartzTable, ResolventError> {
    if z.im == 0.0 {
        return Err(ResolventError::Precondition("need Im z ≠ 0".into()));
    }
    let grids = [*coarse, coarse.refined(2.0)];
    let mut sols = Vec::with_capacity(2);
    let mut source_norm = [0.0; 2];
    for (k, g) in grids.iter().enumerate() {
        let p = assemble_p(field, g)?;
        let f = GridFunction::from_fn(*g, &source);
        source_norm[k] = f.norm();
        sols.push(solve_resolvent(&p, cap, z, &f)?);
    }
    let rows = orders
        .iter()
        .map(|&order| {
            let (c, f) = (schwartz_seminorm(&sols[0], order), schwartz_seminorm(&sols[1], order));
            let scale = c.max(f);
            let rel_change = if scale == 0.0 { 0.0 } else { (f - c).abs() / scale };
            SchwartzRow { order, coarse: c, fine: f, rel_change, stable: rel_change <= SCHWARTZ_TOL }
        })
        .collect();
    Ok(SchwartzTable { z, source_norm, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x: Vec2) -> Complex64 {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
    }

    #[test]
    fn zero_source_gives_zero_table() {
        let g = SpacetimeGrid::square(6.0, 24).unwrap();
        let t = schwartz_preservation_diagnostic(&InverseMetricField::flat(), &g, &CapSpec::off(&g), Complex64::new(0.0, 1.0), |_| Complex64::new(0.0, 0.0), &[0.0, 2.0]).unwrap();
        assert!(t.rows.iter().all(|r| r.coarse == 0.0 && r.fine == 0.0 && r.stable));
    }

    #[test]
    fn order_zero_respects_resolvent_bound() {
        let g = SpacetimeGrid::square(6.0, 24).unwrap();
        let z = Complex64::new(0.5, 2.0);
        let t = schwartz_preservation_diagnostic(&InverseMetricField::flat(), &g, &CapSpec::off(&g), z, gaussian, &[0.0]).unwrap();
        let r = t.rows[0];
        assert!(r.coarse <= t.source_norm[0] / z.im + 1e-12);
        assert!(r.fine <= t.source_norm[1] / z.im + 1e-12);
    }

    #[test]
    fn flat_gaussian_second_order_is_stable() {
        let g = SpacetimeGrid::square(8.0, 32).unwrap();
        let t = schwartz_preservation_diagnostic(&InverseMetricField::flat(), &g, &CapSpec::default_for(&g), Complex64::new(0.0, 1.0), gaussian, &[2.0]).unwrap();
        assert!(t.rows[0].stable, "{:?}", t.rows[0]);
    }
}
