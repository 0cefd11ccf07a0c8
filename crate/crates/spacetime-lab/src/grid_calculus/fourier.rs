//! Two-dimensional FFTs on the grid layout (`t`-major) and Fourier
//! multipliers.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::grid::{GridFunction, SpacetimeGrid};
use crate::Complex64;

/// Planned 2-D transforms of an `nt × ny` array. Forward uses `e^{−i}`,
/// inverse `e^{+i}`; neither is normalised.
pub struct Fft2 {
    nt: usize,
    ny: usize,
    t_fwd: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    t_inv: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nt: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self { nt, ny, t_fwd: p.plan_fft_forward(nt), y_fwd: p.plan_fft_forward(ny), t_inv: p.plan_fft_inverse(nt), y_inv: p.plan_fft_inverse(ny) }
    }

    pub fn for_grid(grid: &SpacetimeGrid) -> Self {
        Self::new(grid.nt, grid.ny)
    }

    pub fn len(&self) -> usize {
        self.nt * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.nt * self.ny);
        let (ft, fy) = if inverse { (&self.t_inv, &self.y_inv) } else { (&self.t_fwd, &self.y_fwd) };
        fy.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); self.nt];
        for j in 0..self.ny {
            for i in 0..self.nt {
                col[i] = data[i * self.ny + j];
            }
            ft.process(&mut col);
            for i in 0..self.nt {
                data[i * self.ny + j] = col[i];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, false)
    }

    /// Inverse transform including the `1/N` normalisation.
    pub fn inverse_normalized(&self, data: &mut [Complex64]) {
        self.process(data, true);
        let s = 1.0 / (self.nt * self.ny) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// `m(D)u` for a multiplier `m(τ, η)` on the periodic box.
pub fn fourier_multiplier(u: &GridFunction, m: impl Fn(f64, f64) -> Complex64) -> GridFunction {
    let g = u.grid;
    let fft = Fft2::for_grid(&g);
    let mut v = u.values.clone();
    fft.forward(&mut v);
    for (k, z) in v.iter_mut().enumerate() {
        let f = g.frequency(k);
        *z *= m(f[0], f[1]);
    }
    fft.inverse_normalized(&mut v);
    GridFunction { grid: g, values: v }
}

/// Removes the top `fraction` of frequencies on each axis (by `|k̃|/(N/2)`).
pub fn band_limit(u: &GridFunction, fraction: f64) -> GridFunction {
    let g = u.grid;
    let kt = std::f64::consts::PI / g.ht() * (1.0 - fraction);
    let ky = std::f64::consts::PI / g.hy() * (1.0 - fraction);
    fourier_multiplier(u, |t, y| if t.abs() <= kt && y.abs() <= ky { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let g = SpacetimeGrid::new(2.0, 3.0, 16, 12).unwrap();
        let (a, b) = (3usize, 10usize);
        let (tau, eta) = (g.tau(a), g.eta(b));
        let u = GridFunction::from_fn(g, |p| Complex64::from_polar(1.0, tau * (p[0] + g.lt) + eta * (p[1] + g.ly)));
        let mut v = u.values.clone();
        Fft2::for_grid(&g).forward(&mut v);
        for (k, z) in v.iter().enumerate() {
            let want = if k == g.index(a, b) { g.len() as f64 } else { 0.0 };
            assert!((z.norm() - want).abs() < 1e-9);
        }
        let mut w = v.clone();
        Fft2::for_grid(&g).inverse_normalized(&mut w);
        for (x, y) in w.iter().zip(&u.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
