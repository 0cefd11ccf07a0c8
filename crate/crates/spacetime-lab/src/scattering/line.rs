//! Periodic spatial grids and Cauchy data `(u, D_t u)` on them.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::ScatteringError;
use crate::grid_calculus::grid::fft_frequency;
use crate::grid_calculus::SpacetimeGrid;
use crate::Complex64;

/// `n` points `y_j = −l + j·h`, `h = 2l/n`, periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineGrid {
    pub l: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(l: f64, n: usize) -> Result<Self, ScatteringError> {
        if n < 4 || n % 2 != 0 || !(l > 0.0 && l.is_finite()) {
            return Err(ScatteringError::Precondition(format!("bad line grid: l = {l}, n = {n}")));
        }
        Ok(Self { l, n })
    }

    /// The `y` axis of a spacetime grid.
    pub fn of(grid: &SpacetimeGrid) -> Self {
        Self { l: grid.ly, n: grid.ny }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.l + j as f64 * self.h()
    }

    pub fn eta(&self, k: usize) -> f64 {
        fft_frequency(k, self.n, self.h())
    }

    /// Symbol `(4/h²) sin²(ηh/2)` of the periodic three-point `−∂_y²`.
    pub fn eta_hat_sq(&self, k: usize) -> f64 {
        let h = self.h();
        let s = (0.5 * self.eta(k) * h).sin();
        4.0 * s * s / (h * h)
    }
}

/// Planned forward/inverse transforms of length `n`.
#[derive(Clone)]
pub struct LineFft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
}

impl std::fmt::Debug for LineFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LineFft({})", self.n)
    }
}

impl LineFft {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Self { fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n), n }
    }

    pub fn forward(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        self.fwd.process(&mut w);
        w
    }

    /// Inverse including `1/n`.
    pub fn inverse(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        self.inv.process(&mut w);
        let s = 1.0 / self.n as f64;
        w.iter_mut().for_each(|z| *z *= s);
        w
    }
}

/// A Cauchy datum `(u, v)` with `v` standing for `D_t u = −i∂_t u`, and
/// the Sobolev order `m` of the space `H^{m+1} ⊕ H^m` it is measured in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyDatum {
    pub line: LineGrid,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub order: f64,
}

fn l2(h: f64, v: &[Complex64]) -> f64 {
    (h * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

impl CauchyDatum {
    pub fn zeros(line: LineGrid) -> Self {
        Self { line, u: vec![Complex64::new(0.0, 0.0); line.n], v: vec![Complex64::new(0.0, 0.0); line.n], order: 0.0 }
    }

    pub fn new(line: LineGrid, u: Vec<Complex64>, v: Vec<Complex64>) -> Result<Self, ScatteringError> {
        if u.len() != line.n || v.len() != line.n {
            return Err(ScatteringError::Precondition("datum length does not match the line grid".into()));
        }
        let d = Self { line, u, v, order: 0.0 };
        if !d.is_finite() {
            return Err(ScatteringError::Precondition("datum has non-finite entries".into()));
        }
        Ok(d)
    }

    pub fn from_fn(line: LineGrid, u: impl Fn(f64) -> Complex64, v: impl Fn(f64) -> Complex64) -> Self {
        Self { line, u: (0..line.n).map(|j| u(line.y(j))).collect(), v: (0..line.n).map(|j| v(line.y(j))).collect(), order: 0.0 }
    }

    /// The `k`-th of the `2n` unit data: `u = e_k` for `k < n`, else `v = e_{k−n}`.
    pub fn basis(line: LineGrid, k: usize) -> Self {
        let mut d = Self::zeros(line);
        if k < line.n {
            d.u[k] = Complex64::new(1.0, 0.0);
        } else {
            d.v[k - line.n] = Complex64::new(1.0, 0.0);
        }
        d
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(u, v)` stacked into one vector of length `2n`.
    pub fn stacked(&self) -> Vec<Complex64> {
        self.u.iter().chain(&self.v).copied().collect()
    }

    pub fn from_stacked(line: LineGrid, w: &[Complex64]) -> Self {
        Self { line, u: w[..line.n].to_vec(), v: w[line.n..].to_vec(), order: 0.0 }
    }

    pub fn add(&self, o: &Self) -> Self {
        let zip = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Self { line: self.line, u: zip(&self.u, &o.u), v: zip(&self.v, &o.v), order: self.order }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let zip = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Self { line: self.line, u: zip(&self.u, &o.u), v: zip(&self.v, &o.v), order: self.order }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { line: self.line, u: self.u.iter().map(|z| z * s).collect(), v: self.v.iter().map(|z| z * s).collect(), order: self.order }
    }

    /// `‖⟨D⟩^{m+1}u‖ + ‖⟨D⟩^m v‖` with the discrete `L²` norm.
    pub fn energy_space_norm(&self, fft: &LineFft, m: f64) -> f64 {
        let (uh, vh) = (fft.forward(&self.u), fft.forward(&self.v));
        let n = self.line.n as f64;
        let h = self.line.h();
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..self.line.n {
            let j = 1.0 + self.line.eta(k).powi(2);
            a += j.powf(m + 1.0) * uh[k].norm_sqr();
            b += j.powf(m) * vh[k].norm_sqr();
        }
        // Parseval: Σ|u_j|² = Σ|û_k|²/n.
        (h * a / n).sqrt() + (h * b / n).sqrt()
    }

    /// `‖u‖ + ‖v‖` in discrete `L²`, a cheap proxy used for scaling.
    pub fn l2_norm(&self) -> f64 {
        l2(self.line.h(), &self.u) + l2(self.line.h(), &self.v)
    }
}

/// Discrete `L²` norm on a line grid.
pub fn line_norm(line: &LineGrid, v: &[Complex64]) -> f64 {
    l2(line.h(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip() {
        let line = LineGrid::new(3.0, 16).unwrap();
        let fft = LineFft::new(line.n);
        let v: Vec<Complex64> = (0..16).map(|j| Complex64::new(j as f64, -(j as f64).sin())).collect();
        let w = fft.inverse(&fft.forward(&v));
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn energy_norm_of_plane_wave() {
        let line = LineGrid::new(std::f64::consts::PI, 32).unwrap();
        let fft = LineFft::new(line.n);
        // e^{3iy} on a 2π-periodic line: ‖u‖² = 2π, ⟨η⟩² = 10.
        let d = CauchyDatum::from_fn(line, |y| Complex64::from_polar(1.0, 3.0 * y), |_| Complex64::new(0.0, 0.0));
        let want = (2.0 * std::f64::consts::PI * 10.0).sqrt();
        assert!((d.energy_space_norm(&fft, 0.0) - want).abs() < 1e-10);
    }
}
