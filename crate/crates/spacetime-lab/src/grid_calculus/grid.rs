//! Uniform spacetime grids and complex grid functions.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Complex64, Vec2};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("grid spacing {h} under-resolves the bump of width {width}: need at least 8 points per width")]
    Resolution { h: f64, width: f64 },
    #[error("{n} unknowns exceed the dense limit {max}")]
    Size { n: usize, max: usize },
    #[error("dense eigensolver failed")]
    Eigen,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `N_t × N_y` points `t_i = −L_t + i·h_t`, `h = 2L/N`, on `[−L, L)`.
/// Operators use Dirichlet truncation; Fourier multipliers treat the box
/// as periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeGrid {
    pub lt: f64,
    pub ly: f64,
    pub nt: usize,
    pub ny: usize,
}

impl SpacetimeGrid {
    pub fn new(lt: f64, ly: f64, nt: usize, ny: usize) -> Result<Self, GridError> {
        let g = Self { lt, ly, nt, ny };
        g.validate()?;
        Ok(g)
    }

    pub fn square(l: f64, n: usize) -> Result<Self, GridError> {
        Self::new(l, l, n, n)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.nt < 8 || self.ny < 8 || self.nt % 2 != 0 || self.ny % 2 != 0 {
            return Err(GridError::Invalid(format!("point counts must be even and >= 8, got {} x {}", self.nt, self.ny)));
        }
        if !(self.lt > 0.0 && self.ly > 0.0 && self.lt.is_finite() && self.ly.is_finite()) {
            return Err(GridError::Invalid("half-lengths must be positive".into()));
        }
        Ok(())
    }

    /// Same box, `factor` times as many points per axis.
    pub fn refined(&self, factor: f64) -> Self {
        let r = |n: usize| (((n as f64 * factor) / 2.0).round() as usize * 2).max(8);
        Self { nt: r(self.nt), ny: r(self.ny), ..*self }
    }

    pub fn ht(&self) -> f64 {
        2.0 * self.lt / self.nt as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nt * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.ht() * self.hy()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.ny, k % self.ny)
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.lt + i as f64 * self.ht()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.ly + j as f64 * self.hy()
    }

    pub fn point(&self, k: usize) -> Vec2 {
        let (i, j) = self.split(k);
        [self.t(i), self.y(j)]
    }

    pub fn points(&self) -> Vec<Vec2> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Dual frequency of FFT bin `k` along the `t` axis.
    pub fn tau(&self, k: usize) -> f64 {
        fft_frequency(k, self.nt, self.ht())
    }

    pub fn eta(&self, l: usize) -> f64 {
        fft_frequency(l, self.ny, self.hy())
    }

    pub fn frequency(&self, k: usize) -> Vec2 {
        let (a, b) = self.split(k);
        [self.tau(a), self.eta(b)]
    }

    /// Largest radius of a disc centred at the origin inside the box.
    pub fn inner_radius(&self) -> f64 {
        self.lt.min(self.ly)
    }
}

/// Signed frequency `2πk̃/(N h)` of bin `k`, `k̃ ∈ [−N/2, N/2)`.
pub fn fft_frequency(k: usize, n: usize, h: f64) -> f64 {
    let ks = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    std::f64::consts::TAU * ks / (n as f64 * h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: SpacetimeGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: SpacetimeGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: SpacetimeGrid, f: impl Fn(Vec2) -> Complex64) -> Self {
        Self { grid, values: (0..grid.len()).map(|k| f(grid.point(k))).collect() }
    }

    pub fn from_values(grid: SpacetimeGrid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `∫ ū v` with uniform trapezoid weights.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn map(&self, f: impl Fn(Vec2, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().enumerate().map(|(k, &z)| f(self.grid.point(k), z)).collect();
        Self { grid: self.grid, values }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|z| z * s).collect() }
    }

    pub fn sub(&self, other: &GridFunction) -> Self {
        Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Self {
        Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    /// Columns `t, y, re, im`.
    pub fn write_csv(&self, path: &Path) -> Result<(), GridError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "y", "re", "im"])?;
        for (k, z) in self.values.iter().enumerate() {
            let p = self.grid.point(k);
            w.serialize((p[0], p[1], z.re, z.im))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(grid: SpacetimeGrid, path: &Path) -> Result<Self, GridError> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::with_capacity(grid.len());
        for rec in r.deserialize() {
            let (_, _, re, im): (f64, f64, f64, f64) = rec?;
            values.push(Complex64::new(re, im));
        }
        Self::from_values(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_counts() {
        assert!(SpacetimeGrid::new(1.0, 1.0, 7, 8).is_err());
        assert!(SpacetimeGrid::new(1.0, 1.0, 6, 8).is_err());
        assert!(SpacetimeGrid::new(1.0, 1.0, 10, 9).is_err());
        assert!(SpacetimeGrid::new(0.0, 1.0, 8, 8).is_err());
        let g = SpacetimeGrid::new(2.0, 3.0, 8, 12).unwrap();
        assert!((g.ht() - 0.5).abs() < 1e-15 && (g.hy() - 0.5).abs() < 1e-15);
        assert_eq!(g.point(g.index(2, 3)), [-1.0, -1.5]);
    }

    #[test]
    fn csv_round_trip() {
        let g = SpacetimeGrid::square(1.0, 8).unwrap();
        let u = GridFunction::from_fn(g, |p| Complex64::new(p[0], p[1] * p[1]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        u.write_csv(&path).unwrap();
        assert_eq!(GridFunction::read_csv(g, &path).unwrap(), u);
    }
}
