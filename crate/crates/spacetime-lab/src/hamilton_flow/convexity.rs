//! Convexity of `|z(t)|²` along the flow far out.

use serde::{Deserialize, Serialize};

use crate::metric_symbols::symbol::{dot, hp_velocity};
use crate::metric_symbols::{InverseMetricField, PhasePoint};

/// `H_p²|x|² = 2|∂_ξp|² + 2x·H_p(∂_ξp)`.
pub fn hp2_norm_x_sq(field: &InverseMetricField, pt: &PhasePoint) -> f64 {
    let (v, _, hv) = hp_velocity(field, pt);
    2.0 * dot(v, v) + 2.0 * dot(pt.x, hv)
}

/// Shell radii and angular resolution for the convexity scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityLattice {
    pub radii: Vec<f64>,
    pub x_angles: usize,
    pub xi_angles: usize,
}

impl Default for ConvexityLattice {
    fn default() -> Self {
        let radii = (0..=40).map(|k| 0.25 * 1.2f64.powi(k)).collect();
        Self { radii, x_angles: 64, xi_angles: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Smallest lattice radius from which every outer shell has a positive
    /// minimum.
    pub r0: f64,
    /// `min H_p²|x|²/|ξ|²` over the shells at or beyond `r0`.
    pub c: f64,
    pub shell_minima: Vec<(f64, f64)>,
    pub pass: bool,
}

pub fn check_convexity(field: &InverseMetricField, lattice: &ConvexityLattice) -> ConvexityReport {
    let minima = crate::par::map_slice(&lattice.radii, |&r| {
        let mut m = f64::INFINITY;
        for i in 0..lattice.x_angles {
            let a = std::f64::consts::TAU * i as f64 / lattice.x_angles as f64;
            let x = [r * a.cos(), r * a.sin()];
            for j in 0..lattice.xi_angles {
                let b = std::f64::consts::TAU * (j as f64 + 0.5) / lattice.xi_angles as f64;
                m = m.min(hp2_norm_x_sq(field, &PhasePoint::new(x, [b.cos(), b.sin()])));
            }
        }
        (r, m)
    });
    let mut idx = minima.len();
    while idx > 0 && minima[idx - 1].1 > 0.0 {
        idx -= 1;
    }
    let pass = idx < minima.len();
    let (r0, c) = if pass {
        (minima[idx].0, minima[idx..].iter().map(|m| m.1).fold(f64::INFINITY, f64::min))
    } else {
        (f64::INFINITY, f64::NAN)
    };
    ConvexityReport { r0, c, shell_minima: minima, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::{make_perturbed_minkowski, MetricSpec};

    #[test]
    fn flat_double_bracket_is_eight() {
        let f = InverseMetricField::flat();
        for pt in [PhasePoint::new([1.0, 2.0], [0.3, -0.7]), PhasePoint::new([-9.0, 0.5], [2.0, 1.0])] {
            assert!((hp2_norm_x_sq(&f, &pt) - 8.0 * dot(pt.xi, pt.xi)).abs() < 1e-12);
        }
        let rep = check_convexity(&f, &ConvexityLattice::default());
        assert!(rep.pass && rep.r0 == 0.25 && (rep.c - 8.0).abs() < 1e-12);
    }

    #[test]
    fn double_bracket_matches_second_difference() {
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.1, 2.0, 1.5) }).unwrap();
        let seed = PhasePoint::new([1.5, -0.5], [0.7, 0.4]);
        let h = 1e-3;
        let r2 = |t: f64| {
            let tr = crate::hamilton_flow::integrate_flow(&f, seed, (-h, h), 1e-13).unwrap();
            let p = tr.at(t);
            dot(p.x, p.x)
        };
        let fd = (r2(h) - 2.0 * r2(0.0) + r2(-h)) / (h * h);
        assert!((fd - hp2_norm_x_sq(&f, &seed)).abs() < 1e-5);
    }

    #[test]
    fn bump_has_finite_radius() {
        let f = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 1.5)).unwrap();
        let rep = check_convexity(&f, &ConvexityLattice::default());
        assert!(rep.pass && rep.r0.is_finite() && rep.c > 0.0);
    }
}
