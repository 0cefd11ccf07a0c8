//! The principal symbol `p(x, ξ) = g^{jk}(x) ξ_j ξ_k` and its calculus.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::InverseMetricField;
use crate::Vec2;

/// A point `(x, ξ)` of phase space, `x = (t, y)`, `ξ = (τ, η)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec2,
    pub xi: Vec2,
}

impl PhasePoint {
    pub fn new(x: Vec2, xi: Vec2) -> Self {
        Self { x, xi }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.xi.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("β undefined at x = {x:?}, ξ = {xi:?}")]
    DegeneratePoint { x: Vec2, xi: Vec2 },
}

/// Leading constant of the bracket of the flat symbol with the conjugate
/// symbol: `{p₀, a} = 2|ξ|²/(1+|ξ|²)`.
pub const CONJUGATE_BRACKET_CONSTANT: f64 = 2.0;

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// `⟨v⟩ = (1 + |v|²)^{1/2}`.
pub fn jap(a: Vec2) -> f64 {
    (1.0 + a[0] * a[0] + a[1] * a[1]).sqrt()
}

/// `ξ̃ = ½ ∂_ξ p₀ = (−τ, η)`.
pub fn xi_tilde(xi: Vec2) -> Vec2 {
    [-xi[0], xi[1]]
}

pub fn flat_symbol(xi: Vec2) -> f64 {
    -xi[0] * xi[0] + xi[1] * xi[1]
}

pub fn eval_symbol(field: &InverseMetricField, pt: &PhasePoint) -> f64 {
    let g = field.inverse_metric(pt.x);
    let xi = pt.xi;
    g[0][0] * xi[0] * xi[0] + 2.0 * g[0][1] * xi[0] * xi[1] + g[1][1] * xi[1] * xi[1]
}

/// `∂_ξ p = 2 g(x) ξ`.
pub fn dxi_symbol(field: &InverseMetricField, pt: &PhasePoint) -> Vec2 {
    let g = field.inverse_metric(pt.x);
    [
        2.0 * (g[0][0] * pt.xi[0] + g[0][1] * pt.xi[1]),
        2.0 * (g[1][0] * pt.xi[0] + g[1][1] * pt.xi[1]),
    ]
}

/// `∂_x p`.
pub fn dx_symbol(field: &InverseMetricField, pt: &PhasePoint) -> Vec2 {
    if field.is_flat() {
        return [0.0, 0.0];
    }
    let j = field.metric_jet(pt.x);
    let xi = pt.xi;
    let q = |m: &[[f64; 2]; 2]| m[0][0] * xi[0] * xi[0] + 2.0 * m[0][1] * xi[0] * xi[1] + m[1][1] * xi[1] * xi[1];
    [q(&j.dg[0]), q(&j.dg[1])]
}

/// Hamilton vector field `(∂_ξ p, −∂_x p)`.
pub fn hamilton_field(field: &InverseMetricField, pt: &PhasePoint) -> (Vec2, Vec2) {
    let dx = dx_symbol(field, pt);
    (dxi_symbol(field, pt), [-dx[0], -dx[1]])
}

/// `H_p f = ∂_ξp·∂_x f − ∂_xp·∂_ξ f` for a function with the given gradients.
pub fn hp_apply(field: &InverseMetricField, pt: &PhasePoint, grad_x: Vec2, grad_xi: Vec2) -> f64 {
    let (v, w) = hamilton_field(field, pt);
    dot(v, grad_x) + dot(w, grad_xi)
}

/// `β = cos(x, ∂_ξ p)`.
pub fn beta(field: &InverseMetricField, pt: &PhasePoint) -> Result<f64, SymbolError> {
    cosine(pt.x, dxi_symbol(field, pt)).ok_or(SymbolError::DegeneratePoint { x: pt.x, xi: pt.xi })
}

/// `β₀ = cos(x, ξ̃)`.
pub fn beta0(pt: &PhasePoint) -> Result<f64, SymbolError> {
    cosine(pt.x, xi_tilde(pt.xi)).ok_or(SymbolError::DegeneratePoint { x: pt.x, xi: pt.xi })
}

fn cosine(a: Vec2, b: Vec2) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `H_p` applied to `v = ∂_ξ p`.
pub(crate) fn hp_velocity(field: &InverseMetricField, pt: &PhasePoint) -> (Vec2, Vec2, Vec2) {
    let (v, w) = hamilton_field(field, pt);
    if field.is_flat() {
        return (v, w, [0.0, 0.0]);
    }
    let j = field.metric_jet(pt.x);
    let mut hv = [0.0; 2];
    for a in 0..2 {
        let mut s = 0.0;
        for b in 0..2 {
            for i in 0..2 {
                s += j.dg[i][a][b] * v[i] * pt.xi[b];
            }
            s += j.g[a][b] * w[b];
        }
        hv[a] = 2.0 * s;
    }
    (v, w, hv)
}

/// `H_p β`, differentiated in closed form.
pub fn hp_beta(field: &InverseMetricField, pt: &PhasePoint) -> Result<f64, SymbolError> {
    let (v, _, hv) = hp_velocity(field, pt);
    let (nx, nv) = (norm(pt.x), norm(v));
    if nx == 0.0 || nv == 0.0 {
        return Err(SymbolError::DegeneratePoint { x: pt.x, xi: pt.xi });
    }
    let b = dot(pt.x, v) / (nx * nv);
    let hxv = dot(v, v) + dot(pt.x, hv);
    let hnx = dot(pt.x, v) / nx;
    let hnv = dot(v, hv) / nv;
    Ok(hxv / (nx * nv) - b * (hnx / nx + hnv / nv))
}

/// `H_p |x| = β |∂_ξ p|`.
pub fn hp_norm_x(field: &InverseMetricField, pt: &PhasePoint) -> f64 {
    let v = dxi_symbol(field, pt);
    let nx = norm(pt.x);
    if nx == 0.0 {
        0.0
    } else {
        dot(pt.x, v) / nx
    }
}

/// `H_p |ξ| = −∂_x p·ξ/|ξ|`.
pub fn hp_norm_xi(field: &InverseMetricField, pt: &PhasePoint) -> f64 {
    let n = norm(pt.xi);
    if n == 0.0 {
        return 0.0;
    }
    let d = dx_symbol(field, pt);
    -dot(d, pt.xi) / n
}

/// `a(x, ξ) = x·ξ̃/(1 + |ξ|²)`.
pub fn conjugate_symbol(pt: &PhasePoint) -> f64 {
    dot(pt.x, xi_tilde(pt.xi)) / (1.0 + dot(pt.xi, pt.xi))
}

/// Gradients `(∂_x a, ∂_ξ a)` of the conjugate symbol.
pub fn conjugate_symbol_gradient(pt: &PhasePoint) -> (Vec2, Vec2) {
    let d = 1.0 + dot(pt.xi, pt.xi);
    let xt = xi_tilde(pt.xi);
    let gx = [xt[0] / d, xt[1] / d];
    let num = dot(pt.x, xt);
    let gxi = [
        -pt.x[0] / d - 2.0 * pt.xi[0] * num / (d * d),
        pt.x[1] / d - 2.0 * pt.xi[1] * num / (d * d),
    ];
    (gx, gxi)
}

/// `{p, a}` for the conjugate symbol.
pub fn conjugate_bracket(field: &InverseMetricField, pt: &PhasePoint) -> f64 {
    let (gx, gxi) = conjugate_symbol_gradient(pt);
    hp_apply(field, pt, gx, gxi)
}
