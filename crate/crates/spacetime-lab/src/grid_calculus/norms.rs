//! Discrete weighted Sobolev norms `‖⟨D⟩^k ⟨x⟩^l u‖`.

use serde::{Deserialize, Serialize};

use super::fourier::Fft2;
use super::grid::{GridFunction, SpacetimeGrid};
use crate::metric_symbols::cutoff::smoothstep;
use crate::Complex64;

/// Boundary taper applied before the periodic Fourier multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    None,
    /// Smooth roll-off to zero over the outer `fraction` of each half-length.
    Collar { fraction: f64 },
}

impl Default for Taper {
    fn default() -> Self {
        Taper::Collar { fraction: 0.1 }
    }
}

impl Taper {
    pub fn eval(&self, grid: &SpacetimeGrid, x: [f64; 2]) -> f64 {
        match *self {
            Taper::None => 1.0,
            Taper::Collar { fraction } => {
                let f = |s: f64, l: f64| {
                    let c = fraction * l;
                    smoothstep((l - s.abs()) / c).0
                };
                f(x[0], grid.lt) * f(x[1], grid.ly)
            }
        }
    }
}

/// `⟨D⟩^k T ⟨x⟩^l u` as a grid function.
pub fn weighted_apply(u: &GridFunction, k: f64, l: f64, taper: Taper) -> GridFunction {
    let g = u.grid;
    let fft = Fft2::for_grid(&g);
    let mut v: Vec<Complex64> =
        u.values.iter().enumerate().map(|(i, z)| {
            let x = g.point(i);
            z * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(0.5 * l) * taper.eval(&g, x)
        }).collect();
    if k != 0.0 {
        fft.forward(&mut v);
        for (i, z) in v.iter_mut().enumerate() {
            let f = g.frequency(i);
            *z *= (1.0 + f[0] * f[0] + f[1] * f[1]).powf(0.5 * k);
        }
        fft.inverse_normalized(&mut v);
    }
    GridFunction { grid: g, values: v }
}

pub fn weighted_norm_with(u: &GridFunction, k: f64, l: f64, taper: Taper) -> f64 {
    weighted_apply(u, k, l, taper).norm()
}

/// `‖⟨D⟩^k ⟨x⟩^l u‖` with the default boundary collar.
pub fn weighted_norm(u: &GridFunction, k: f64, l: f64) -> f64 {
    weighted_norm_with(u, k, l, Taper::default())
}

/// Complex Gaussian entries with the top quarter of frequencies removed.
pub fn random_band_limited(grid: SpacetimeGrid, rng: &mut impl rand::Rng) -> GridFunction {
    use rand_distr::{Distribution, StandardNormal};
    let values = (0..grid.len())
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    super::fourier::band_limit(&GridFunction { grid, values }, 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_orders_give_l2() {
        let g = SpacetimeGrid::square(3.0, 16).unwrap();
        let u = GridFunction::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), x[1]));
        assert!((weighted_norm_with(&u, 0.0, 0.0, Taper::None) - u.norm()).abs() < 1e-13);
    }

    #[test]
    fn plane_wave_is_multiplier_eigenfunction() {
        let g = SpacetimeGrid::square(3.0, 16).unwrap();
        let (a, b) = (3, 13);
        let f = [g.tau(a), g.eta(b)];
        let u = GridFunction::from_fn(g, |x| Complex64::from_polar(1.0, f[0] * x[0] + f[1] * x[1]));
        let jap = (1.0 + f[0] * f[0] + f[1] * f[1]).sqrt();
        for k in [-1.0, 0.5, 2.0] {
            let n = weighted_norm_with(&u, k, 0.0, Taper::None);
            assert!((n - jap.powf(k) * u.norm()).abs() < 1e-10 * n);
        }
    }

    #[test]
    fn duality_on_random_pairs() {
        let g = SpacetimeGrid::square(4.0, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (k, l) in [(1.0, 0.5), (-0.5, 2.0), (2.0, -1.0)] {
            let u = random_band_limited(g, &mut rng);
            let v = random_band_limited(g, &mut rng);
            let lhs = u.inner(&v).norm();
            let rhs = weighted_norm_with(&u, k, l, Taper::None) * weighted_norm_with(&v, -k, -l, Taper::None);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}
