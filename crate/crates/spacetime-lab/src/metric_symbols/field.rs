//! Inverse-metric fields: Minkowski plus a decaying bump.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec2;

/// A scalar with its gradient and Hessian.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: [[f64; 2]; 2],
}

pub type Mat2 = [[f64; 2]; 2];

/// `g^{jk}` together with `dg[i][j][k] = ∂_i g^{jk}` and
/// `d2g[i][l][j][k] = ∂_i ∂_l g^{jk}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Mat2,
    pub dg: [Mat2; 2],
    pub d2g: [[Mat2; 2]; 2],
}

/// Declarative description of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSpec {
    pub bump_amplitude: f64,
    pub bump_center: Vec2,
    pub bump_width: f64,
    /// Decay order μ of both the metric perturbation and the potential.
    pub decay: f64,
    pub potential_amplitude: f64,
    /// Diagonal metric `-c² dt² + h dy²`; no `dt dy` cross term.
    pub product_form: bool,
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            bump_amplitude: 0.0,
            bump_center: [0.0, 0.0],
            bump_width: 2.0,
            decay: 1.5,
            potential_amplitude: 0.0,
            product_form: true,
        }
    }
}

impl MetricSpec {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn bump(amplitude: f64, width: f64, decay: f64) -> Self {
        Self { bump_amplitude: amplitude, bump_width: width, decay, ..Self::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric loses Lorentzian signature at x = {point:?} (det g^jk = {det:.6e}, g^tt = {gtt:.6e})")]
    SignatureViolation { point: Vec2, det: f64, gtt: f64 },
    #[error("invalid metric parameter: {0}")]
    InvalidParameter(String),
}

/// `g^{jk}(x) = g₀^{jk} + a·S(x)·E^{jk}` with the algebraic bump
/// `S(x) = (1 + |x − c|²/w²)^{−μ/2}` and `V = v·S`.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseMetricField {
    spec: MetricSpec,
    coupling: f64,
}

pub const MINKOWSKI: Mat2 = [[-1.0, 0.0], [0.0, 1.0]];

/// Builds the field and checks Lorentzian signature (with `t` timelike) on a
/// 64² lattice around the bump plus its centre.
pub fn make_perturbed_minkowski(spec: MetricSpec) -> Result<InverseMetricField, MetricError> {
    if !(spec.bump_width > 0.0) {
        return Err(MetricError::InvalidParameter("bump_width must be positive".into()));
    }
    if !(spec.decay > 0.0) {
        return Err(MetricError::InvalidParameter("decay must be positive".into()));
    }
    let coupling = if spec.product_form { 0.0 } else { 0.5 };
    let field = InverseMetricField { spec, coupling };
    let c = field.spec.bump_center;
    let span = 6.0 * field.spec.bump_width;
    let n = 64;
    let mut pts = vec![c];
    for i in 0..n {
        for j in 0..n {
            let t = c[0] - span + 2.0 * span * i as f64 / (n - 1) as f64;
            let y = c[1] - span + 2.0 * span * j as f64 / (n - 1) as f64;
            pts.push([t, y]);
        }
    }
    for x in pts {
        let g = field.inverse_metric(x);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(det < 0.0 && g[0][0] < 0.0) {
            return Err(MetricError::SignatureViolation { point: x, det, gtt: g[0][0] });
        }
    }
    Ok(field)
}

impl InverseMetricField {
    pub fn flat() -> Self {
        make_perturbed_minkowski(MetricSpec::flat()).expect("flat metric")
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn decay(&self) -> f64 {
        self.spec.decay
    }

    pub fn is_flat(&self) -> bool {
        self.spec.bump_amplitude == 0.0
    }

    pub fn is_product_form(&self) -> bool {
        self.spec.product_form
    }

    /// The bump profile `S` with exact derivatives.
    pub fn profile(&self, x: Vec2) -> Jet {
        let w2 = self.spec.bump_width * self.spec.bump_width;
        let mu = self.spec.decay;
        let d = [x[0] - self.spec.bump_center[0], x[1] - self.spec.bump_center[1]];
        let q = 1.0 + (d[0] * d[0] + d[1] * d[1]) / w2;
        let s = q.powf(-0.5 * mu);
        let s1 = -mu * s / (q * w2);
        let s2 = mu * (mu + 2.0) * s / (q * q * w2 * w2);
        let mut hess = [[0.0; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                hess[j][k] = s2 * d[j] * d[k] + if j == k { s1 } else { 0.0 };
            }
        }
        Jet { value: s, grad: [s1 * d[0], s1 * d[1]], hess }
    }

    fn polarization(&self) -> Mat2 {
        [[1.0, self.coupling], [self.coupling, 1.0]]
    }

    pub fn inverse_metric(&self, x: Vec2) -> Mat2 {
        let a = self.spec.bump_amplitude;
        if a == 0.0 {
            return MINKOWSKI;
        }
        let s = self.profile(x).value;
        let e = self.polarization();
        let mut g = MINKOWSKI;
        for j in 0..2 {
            for k in 0..2 {
                g[j][k] += a * s * e[j][k];
            }
        }
        g
    }

    pub fn metric_jet(&self, x: Vec2) -> MetricJet {
        let a = self.spec.bump_amplitude;
        let mut out = MetricJet { g: MINKOWSKI, dg: [[[0.0; 2]; 2]; 2], d2g: [[[[0.0; 2]; 2]; 2]; 2] };
        if a == 0.0 {
            return out;
        }
        let s = self.profile(x);
        let e = self.polarization();
        for j in 0..2 {
            for k in 0..2 {
                out.g[j][k] += a * s.value * e[j][k];
                for i in 0..2 {
                    out.dg[i][j][k] = a * s.grad[i] * e[j][k];
                    for l in 0..2 {
                        out.d2g[i][l][j][k] = a * s.hess[i][l] * e[j][k];
                    }
                }
            }
        }
        out
    }

    pub fn potential(&self, x: Vec2) -> f64 {
        let v = self.spec.potential_amplitude;
        if v == 0.0 {
            0.0
        } else {
            v * self.profile(x).value
        }
    }

    pub fn potential_jet(&self, x: Vec2) -> Jet {
        let v = self.spec.potential_amplitude;
        if v == 0.0 {
            return Jet::default();
        }
        let s = self.profile(x);
        Jet {
            value: v * s.value,
            grad: [v * s.grad[0], v * s.grad[1]],
            hess: [[v * s.hess[0][0], v * s.hess[0][1]], [v * s.hess[1][0], v * s.hess[1][1]]],
        }
    }

    /// `det g^{jk}` (negative for Lorentzian signature).
    pub fn inverse_det(&self, x: Vec2) -> f64 {
        let g = self.inverse_metric(x);
        g[0][0] * g[1][1] - g[0][1] * g[1][0]
    }

    /// `|g|^{1/2}` where `|g| = |det g_{jk}| = 1/|det g^{jk}|`.
    pub fn sqrt_abs_g(&self, x: Vec2) -> f64 {
        self.inverse_det(x).abs().powf(-0.5)
    }

    /// Metric `g_{jk}`, the matrix inverse of `g^{jk}`.
    pub fn metric(&self, x: Vec2) -> Mat2 {
        let g = self.inverse_metric(x);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
    }
}

/// Spectral norm of a symmetric 2×2 matrix.
pub fn sym_norm(m: &Mat2) -> f64 {
    let tr = 0.5 * (m[0][0] + m[1][1]);
    let dif = 0.5 * (m[0][0] - m[1][1]);
    let r = (dif * dif + m[0][1] * m[0][1]).sqrt();
    tr.abs() + r
}

/// Square sample lattice `[−half_width, half_width]²` with `points` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayLattice {
    pub half_width: f64,
    pub points: usize,
}

impl Default for DecayLattice {
    fn default() -> Self {
        Self { half_width: 40.0, points: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub claimed_decay: f64,
    pub constant: f64,
    pub refined_constant: f64,
    pub enlarged_constant: f64,
    pub pass: bool,
}

fn decay_constant(field: &InverseMetricField, mu: f64, lat: DecayLattice) -> f64 {
    let n = lat.points.max(2);
    let h = 2.0 * lat.half_width / (n - 1) as f64;
    let rows = crate::par::map_range(n, |i| {
        let mut best: f64 = 0.0;
        for j in 0..n {
            let x = [-lat.half_width + i as f64 * h, -lat.half_width + j as f64 * h];
            let jx2 = 1.0 + x[0] * x[0] + x[1] * x[1];
            let w = |order: f64| jx2.powf(0.5 * (mu + order));
            let mj = field.metric_jet(x);
            let mut dg0 = mj.g;
            for a in 0..2 {
                for b in 0..2 {
                    dg0[a][b] -= MINKOWSKI[a][b];
                }
            }
            let v = field.potential_jet(x);
            best = best.max((sym_norm(&dg0) + v.value.abs()) * w(0.0));
            for i1 in 0..2 {
                best = best.max((sym_norm(&mj.dg[i1]) + v.grad[i1].abs()) * w(1.0));
                for i2 in 0..2 {
                    best = best.max((sym_norm(&mj.d2g[i1][i2]) + v.hess[i1][i2].abs()) * w(2.0));
                }
            }
        }
        best
    });
    rows.into_iter().fold(0.0, f64::max)
}

/// Fits `C = max_{|α|≤2} |∂^α(g − g₀)|·⟨x⟩^{μ+|α|}` (spectral norm, with
/// `|∂^α V|` added) on the lattice and checks that `C` is stable under
/// refinement (±20%) and does not grow when the lattice is doubled in size.
pub fn verify_symbol_decay(field: &InverseMetricField, mu: f64, lattice: DecayLattice) -> DecayReport {
    let c = decay_constant(field, mu, lattice);
    let refined = decay_constant(field, mu, DecayLattice { points: 2 * lattice.points, ..lattice });
    let enlarged = decay_constant(field, mu, DecayLattice { half_width: 2.0 * lattice.half_width, ..lattice });
    let pass = if c == 0.0 {
        refined == 0.0 && enlarged == 0.0
    } else {
        c.is_finite() && (refined / c - 1.0).abs() <= 0.2 && enlarged <= 1.2 * c
    };
    DecayReport { claimed_decay: mu, constant: c, refined_constant: refined, enlarged_constant: enlarged, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_profile(f: &InverseMetricField, x: Vec2, h: f64) -> (Vec2, Mat2) {
        let s = |p: Vec2| f.profile(p).value;
        let mut g = [0.0; 2];
        let mut hs = [[0.0; 2]; 2];
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (s(xp) - s(xm)) / (2.0 * h);
            for j in 0..2 {
                let mut a = x;
                let mut b = x;
                let mut c = x;
                let mut d = x;
                a[i] += h;
                a[j] += h;
                b[i] += h;
                b[j] -= h;
                c[i] -= h;
                c[j] += h;
                d[i] -= h;
                d[j] -= h;
                hs[i][j] = (s(a) - s(b) - s(c) + s(d)) / (4.0 * h * h);
            }
        }
        (g, hs)
    }

    #[test]
    fn flat_is_minkowski() {
        let f = InverseMetricField::flat();
        assert_eq!(f.inverse_metric([3.0, -2.0]), MINKOWSKI);
        assert_eq!(f.sqrt_abs_g([1.0, 1.0]), 1.0);
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let f = make_perturbed_minkowski(MetricSpec {
            bump_center: [0.3, -0.7],
            ..MetricSpec::bump(0.1, 2.0, 1.5)
        })
        .unwrap();
        for x in [[0.1, 0.2], [2.0, -3.0], [-5.0, 1.5]] {
            let j = f.profile(x);
            let (g, h) = fd_profile(&f, x, 1e-4);
            for i in 0..2 {
                assert!((j.grad[i] - g[i]).abs() < 1e-8);
                for k in 0..2 {
                    assert!((j.hess[i][k] - h[i][k]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn large_amplitude_breaks_signature() {
        for product_form in [true, false] {
            let spec = MetricSpec { product_form, ..MetricSpec::bump(10.0, 2.0, 1.5) };
            assert!(matches!(make_perturbed_minkowski(spec), Err(MetricError::SignatureViolation { .. })));
        }
    }

    #[test]
    fn product_form_has_no_cross_term() {
        let f = make_perturbed_minkowski(MetricSpec::bump(0.3, 2.0, 1.5)).unwrap();
        assert_eq!(f.inverse_metric([0.5, 0.5])[0][1], 0.0);
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.3, 2.0, 1.5) }).unwrap();
        let g = f.inverse_metric([0.5, 0.5]);
        assert!(g[0][1] != 0.0 && g[0][1] == g[1][0]);
    }

    #[test]
    fn metric_inverts_inverse_metric() {
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.4, 1.0, 1.5) }).unwrap();
        let x = [0.2, 0.1];
        let (a, b) = (f.metric(x), f.inverse_metric(x));
        for i in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|k| a[i][k] * b[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn decay_fit_flat_is_zero() {
        let r = verify_symbol_decay(&InverseMetricField::flat(), 1.5, DecayLattice::default());
        assert_eq!(r.constant, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn decay_fit_linear_in_amplitude() {
        let lat = DecayLattice::default();
        let c = |a: f64| {
            let f = make_perturbed_minkowski(MetricSpec::bump(a, 2.0, 1.5)).unwrap();
            verify_symbol_decay(&f, 1.5, lat)
        };
        let (r1, r2) = (c(0.05), c(0.1));
        assert!(r1.pass && r2.pass);
        assert!((r2.constant / r1.constant - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overclaimed_decay_fails() {
        let f = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 1.5)).unwrap();
        let r = verify_symbol_decay(&f, 2.0, DecayLattice::default());
        assert!(r.enlarged_constant > 1.2 * r.constant);
        assert!(!r.pass);
    }
}
