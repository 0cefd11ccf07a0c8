//! Conformal reduction of a product-form field in 1+1 dimensions.
//!
//! For `g = −c² dt² + h dy²` write `g = c² g̃` with `g̃ = −dt² + h̃ dy²`,
//! `h̃ = h/c²`. In two dimensions `□_g = c^{−2}□_g̃`, so
//! `c² P = ∂_t² + r ∂_t − Δ_h̃ + c²V` with `r = ½ ∂_t log h̃` and
//! `Δ_h̃ = h̃^{−1/2} ∂_y h̃^{−1/2} ∂_y`. The scalar-curvature correction has
//! coefficient `(n − 1)/4n = 0` here.

use serde::{Deserialize, Serialize};

use super::ScatteringError;
use crate::grid_calculus::{assemble_p, quarter_density, GridFunction, SpacetimeGrid};
use crate::metric_symbols::InverseMetricField;
use crate::resolvent_lab::TrialFunction;
use crate::Complex64;

/// Coefficient fields of the reduced operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCoefficients {
    field: InverseMetricField,
}

impl ReducedCoefficients {
    pub(crate) fn new(field: &InverseMetricField) -> Self {
        Self { field: field.clone() }
    }

    /// `c² = −1/g^{tt}`.
    pub fn lapse_sq(&self, t: f64, y: f64) -> f64 {
        -1.0 / self.field.inverse_metric([t, y])[0][0]
    }

    /// `h̃ = h/c² = −g^{tt}/g^{yy}`.
    pub fn spatial_metric(&self, t: f64, y: f64) -> f64 {
        let g = self.field.inverse_metric([t, y]);
        -g[0][0] / g[1][1]
    }

    /// `r = ½ ∂_t log h̃`.
    pub fn damping(&self, t: f64, y: f64) -> f64 {
        let j = self.field.metric_jet([t, y]);
        0.5 * (j.dg[0][0][0] / j.g[0][0] - j.dg[0][1][1] / j.g[1][1])
    }

    /// `Ṽ = c² V`.
    pub fn potential(&self, t: f64, y: f64) -> f64 {
        self.lapse_sq(t, y) * self.field.potential([t, y])
    }

    /// `|g|^{1/4}`, the factor between `P` and `P₁` solutions.
    pub fn quarter_density(&self, t: f64, y: f64) -> f64 {
        self.field.sqrt_abs_g([t, y]).sqrt()
    }
}

pub fn conformal_reduce(field: &InverseMetricField) -> Result<ReducedCoefficients, ScatteringError> {
    if !field.is_product_form() {
        return Err(ScatteringError::NotProductForm);
    }
    Ok(ReducedCoefficients::new(field))
}

/// `(∂_t² + r∂_t − Δ_h̃ + Ṽ)u` with centred differences; zero on the outer
/// ring of nodes.
pub fn reduced_apply(red: &ReducedCoefficients, u: &GridFunction) -> GridFunction {
    let g = u.grid;
    let (k, h) = (g.ht(), g.hy());
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for i in 1..g.nt - 1 {
        for j in 1..g.ny - 1 {
            let (t, y) = (g.t(i), g.y(j));
            let at = |di: i64, dj: i64| u.values[g.index((i as i64 + di) as usize, (j as i64 + dj) as usize)];
            let c = at(0, 0);
            let dtt = (at(1, 0) - 2.0 * c + at(-1, 0)) / (k * k);
            let dt = (at(1, 0) - at(-1, 0)) / (2.0 * k);
            let s = red.spatial_metric(t, y).sqrt();
            let (sp, sm) = (red.spatial_metric(t, y + 0.5 * h).powf(-0.5), red.spatial_metric(t, y - 0.5 * h).powf(-0.5));
            let lap = (sp * (at(0, 1) - c) - sm * (c - at(0, -1))) / (s * h * h);
            out[g.index(i, j)] = dtt + red.damping(t, y) * dt - lap + red.potential(t, y) * c;
        }
    }
    GridFunction { grid: g, values: out }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalResidual {
    /// `max ‖c²Pu − P̃u‖ / ‖c²Pu‖` over the trials, interior nodes.
    pub residual: f64,
    /// `max ‖c^{−2}P̃u − Pu‖ / ‖Pu‖`.
    pub round_trip: f64,
    pub trials: usize,
}

fn interior_norm(g: &SpacetimeGrid, v: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for i in 1..g.nt - 1 {
        for j in 1..g.ny - 1 {
            s += v[g.index(i, j)].norm_sqr();
        }
    }
    (s * g.cell_area()).sqrt()
}

/// Compares `c²P` (from the assembled `P₁ = w P w^{−1}`) with the reduced
/// operator on band-limited trial functions that vanish near the box edge.
pub fn conformal_identity_residual(field: &InverseMetricField, grid: &SpacetimeGrid, trials: &[TrialFunction]) -> Result<ConformalResidual, ScatteringError> {
    let red = conformal_reduce(field)?;
    let p1 = assemble_p(field, grid)?;
    let w = quarter_density(field, grid);
    let c2: Vec<f64> = (0..grid.len()).map(|k| {
        let x = grid.point(k);
        red.lapse_sq(x[0], x[1])
    }).collect();
    let mut out = ConformalResidual { residual: 0.0, round_trip: 0.0, trials: trials.len() };
    for trial in trials {
        let u = trial.sample(grid);
        let wu: Vec<Complex64> = u.values.iter().zip(&w).map(|(z, w)| z * w).collect();
        let pu: Vec<Complex64> = p1.apply(&wu).iter().zip(&w).map(|(z, w)| z / w).collect();
        let lhs: Vec<Complex64> = pu.iter().zip(&c2).map(|(z, c)| z * c).collect();
        let rhs = reduced_apply(&red, &u).values;
        let d1: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let back: Vec<Complex64> = rhs.iter().zip(&c2).zip(&pu).map(|((r, c), p)| r / c - p).collect();
        out.residual = out.residual.max(interior_norm(grid, &d1) / interior_norm(grid, &lhs));
        out.round_trip = out.round_trip.max(interior_norm(grid, &back) / interior_norm(grid, &pu));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::{make_perturbed_minkowski, MetricSpec};

    #[test]
    fn flat_reduction_is_trivial() {
        let red = conformal_reduce(&InverseMetricField::flat()).unwrap();
        assert_eq!(red.damping(0.3, -1.0), 0.0);
        assert_eq!(red.spatial_metric(0.3, -1.0), 1.0);
        assert_eq!(red.lapse_sq(0.3, -1.0), 1.0);
        let g = SpacetimeGrid::square(4.0, 32).unwrap();
        let r = conformal_identity_residual(&InverseMetricField::flat(), &g, &TrialFunction::batch(&g, 3, 1)).unwrap();
        assert!(r.residual < 1e-12 && r.round_trip < 1e-12, "{r:?}");
    }

    #[test]
    fn bump_residual_is_second_order() {
        let f = make_perturbed_minkowski(MetricSpec { potential_amplitude: 0.2, ..MetricSpec::bump(0.3, 2.0, 1.5) }).unwrap();
        let g = SpacetimeGrid::square(4.0, 32).unwrap();
        let trials = TrialFunction::batch(&g, 4, 3);
        let a = conformal_identity_residual(&f, &g, &trials).unwrap();
        let b = conformal_identity_residual(&f, &g.refined(2.0), &trials).unwrap();
        let ratio = a.residual / b.residual;
        assert!(a.residual > 1e-8 && ratio > 3.0 && ratio < 5.0, "{a:?} {b:?}");
    }

    #[test]
    fn cross_term_field_is_refused() {
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.1, 2.0, 1.5) }).unwrap();
        assert!(matches!(conformal_reduce(&f), Err(ScatteringError::NotProductForm)));
    }
}
