//! Complex absorbing potential near the edge of the box.

use serde::{Deserialize, Serialize};

use super::ResolventError;
use crate::grid_calculus::SpacetimeGrid;

/// `W(x) = η ((|x| − R₀)₊ / (L − R₀))^p` with `L` the inner radius of the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapSpec {
    pub onset: f64,
    pub strength: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

fn default_exponent() -> f64 {
    2.0
}

impl CapSpec {
    /// Onset at `0.7 L`, strength 1, quadratic profile.
    pub fn default_for(grid: &SpacetimeGrid) -> Self {
        Self { onset: 0.7 * grid.inner_radius(), strength: 1.0, exponent: 2.0 }
    }

    /// Same onset as the default but no absorption.
    pub fn off(grid: &SpacetimeGrid) -> Self {
        Self { strength: 0.0, ..Self::default_for(grid) }
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    pub fn is_off(&self) -> bool {
        self.strength == 0.0
    }

    pub fn validate(&self, grid: &SpacetimeGrid) -> Result<(), ResolventError> {
        let l = grid.inner_radius();
        if !(self.onset > 0.0 && self.onset < l) {
            return Err(ResolventError::Precondition(format!("absorber onset {} must lie in (0, {l})", self.onset)));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(ResolventError::Precondition("absorber strength must be finite and ≥ 0".into()));
        }
        if !(self.exponent >= 1.0) {
            return Err(ResolventError::Precondition("absorber exponent must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn eval(&self, grid: &SpacetimeGrid, x: [f64; 2]) -> f64 {
        let l = grid.inner_radius();
        let r = x[0].hypot(x[1]);
        let s = ((r - self.onset) / (l - self.onset)).max(0.0);
        self.strength * s.powf(self.exponent)
    }

    /// `W` sampled at every grid point.
    pub fn absorber(&self, grid: &SpacetimeGrid) -> Vec<f64> {
        (0..grid.len()).map(|k| self.eval(grid, grid.point(k))).collect()
    }

    /// Indicator of the absorber-free disc `|x| ≤ R₀`.
    pub fn interior(&self, grid: &SpacetimeGrid) -> Vec<bool> {
        (0..grid.len())
            .map(|k| {
                let x = grid.point(k);
                x[0].hypot(x[1]) <= self.onset
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_inside_and_grows_outside() {
        let g = SpacetimeGrid::square(10.0, 40).unwrap();
        let cap = CapSpec::default_for(&g);
        assert_eq!(cap.onset, 7.0);
        assert_eq!(cap.eval(&g, [3.0, -4.0]), 0.0);
        assert_eq!(cap.eval(&g, [7.0, 0.0]), 0.0);
        assert!((cap.eval(&g, [0.0, 10.0]) - 1.0).abs() < 1e-15);
        assert!((cap.eval(&g, [8.5, 0.0]) - 0.25).abs() < 1e-15);
        assert!(cap.absorber(&g).iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn onset_must_sit_inside_box() {
        let g = SpacetimeGrid::square(10.0, 40).unwrap();
        let bad = CapSpec { onset: 10.0, strength: 1.0, exponent: 2.0 };
        assert!(bad.validate(&g).is_err());
        assert!(CapSpec::off(&g).validate(&g).is_ok());
    }
}
