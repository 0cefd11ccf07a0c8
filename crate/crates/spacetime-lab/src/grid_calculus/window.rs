//! Spectral windows `φ(P_h)`: dense functional calculus or a Chebyshev
//! filter.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::grid::GridError;
use super::operator::{ChebyshevSeries, GridOperator, OperatorData, OperatorKind};
use crate::Complex64;

/// Largest operator handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 6400;

/// `C^∞` step: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smooth_step(u: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        f(u) / (f(u) + f(1.0 - u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSpec {
    /// `φ ≡ 1`.
    All,
    /// `φ = 1` on `[lo, hi]`, `0` outside `[lo − ramp, hi + ramp]`, smooth.
    Band { lo: f64, hi: f64, ramp: f64 },
}

impl WindowSpec {
    pub fn band(lo: f64, hi: f64, ramp: f64) -> Self {
        WindowSpec::Band { lo, hi, ramp }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WindowSpec::All => 1.0,
            WindowSpec::Band { lo, hi, ramp } => smooth_step((x - lo + ramp) / ramp) * smooth_step((hi + ramp - x) / ramp),
        }
    }

    /// Whether `φ` vanishes in a neighbourhood of `0`.
    pub fn excludes_zero(&self) -> bool {
        match *self {
            WindowSpec::All => false,
            WindowSpec::Band { lo, hi, ramp } => lo - ramp > 0.0 || hi + ramp < 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMethod {
    Dense,
    Chebyshev { degree: usize },
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>), GridError> {
    let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(|_| GridError::Eigen)?;
    let s = e.S().column_vector();
    let vals = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// `U diag(f(λ)) U†`.
pub fn functional_calculus(vals: &[f64], vecs: &Mat<Complex64>, f: impl Fn(f64) -> f64) -> Mat<Complex64> {
    let n = vals.len();
    let scaled = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * f(vals[j]));
    &scaled * vecs.adjoint()
}

/// Chebyshev interpolation coefficients of `f` on `[−1, 1]` at `degree + 1`
/// first-kind nodes.
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let nodes: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let th = std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            (th, f(th.cos()))
        })
        .collect();
    (0..m)
        .map(|k| {
            let c = 2.0 / m as f64 * nodes.iter().map(|(th, v)| v * (k as f64 * th).cos()).sum::<f64>();
            if k == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

/// `φ(P_h)` as a Chebyshev series in the sparse `P_h` over its Gershgorin
/// interval. Also returns the sum of the last tenth of `|c_k|` as the
/// filter tolerance.
pub fn chebyshev_window(p: &GridOperator, w: &WindowSpec, degree: usize) -> Result<(GridOperator, f64), GridError> {
    let base = p.as_csr().ok_or_else(|| GridError::Invalid("Chebyshev filtering needs a sparse operator".into()))?.clone();
    let (lo, hi) = base.gershgorin();
    let (center, half_width) = (0.5 * (lo + hi), 0.5 * (hi - lo).max(1e-12));
    let coeffs = chebyshev_coefficients(|s| w.eval(center + half_width * s), degree);
    let tail = coeffs[coeffs.len() - (coeffs.len() / 10).max(1)..].iter().map(|c| c.abs()).sum();
    let op = GridOperator {
        grid: p.grid,
        kind: OperatorKind::Window,
        hermitian: true,
        periodization_error: 0.0,
        data: OperatorData::Chebyshev(ChebyshevSeries { base, center, half_width, coeffs }),
    };
    Ok((op, tail))
}

pub fn spectral_window(p: &GridOperator, w: &WindowSpec, method: WindowMethod) -> Result<GridOperator, GridError> {
    if !p.hermitian {
        return Err(GridError::Invalid("spectral window needs a Hermitian operator".into()));
    }
    match method {
        WindowMethod::Dense => {
            let n = p.dim();
            if n > DENSE_LIMIT {
                return Err(GridError::Size { n, max: DENSE_LIMIT });
            }
            let (vals, vecs) = hermitian_eigen(&p.to_dense())?;
            Ok(GridOperator::dense(p.grid, OperatorKind::Window, true, functional_calculus(&vals, &vecs, |x| w.eval(x))))
        }
        WindowMethod::Chebyshev { degree } => Ok(chebyshev_window(p, w, degree)?.0),
    }
}
