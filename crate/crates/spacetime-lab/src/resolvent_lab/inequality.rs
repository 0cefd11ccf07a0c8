//! Random-trial fits of the constants in the subelliptic and local
//! compactness inequalities, compared across one grid doubling.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ResolventError;
use crate::grid_calculus::{assemble_p, weighted_norm, GridFunction, GridOperator, SpacetimeGrid, Taper};
use crate::metric_symbols::InverseMetricField;
use crate::Complex64;

/// Allowed relative change of a fitted constant across the doubling.
pub const STABILITY_BAND: f64 = 0.25;

/// Taper that makes trials vanish smoothly well before the box edge.
pub const TRIAL_TAPER: Taper = Taper::Collar { fraction: 0.3 };

/// A band-limited function on the continuum box: complex Gaussian
/// coefficients on the Fourier modes of a base grid inside [`TRIAL_BAND`],
/// times a boundary taper. Sampling the same trial on a
/// refined grid keeps the function fixed while the discretisation changes.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialFunction {
    pub base: SpacetimeGrid,
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    /// Row-major in `tau`.
    pub coeffs: Vec<Complex64>,
    pub taper: Taper,
}

/// Fraction of each axis' Nyquist range kept in a trial. At `kh = π/3` the
/// three-point symbol `(2/h)² sin²(kh/2)` is within 9% of `k²`; at the top of a
/// three-quarter band it is only 62%, and fits there measure the stencil.
pub const TRIAL_BAND: f64 = 1.0 / 3.0;

fn band(n: usize, h: f64) -> Vec<f64> {
    let cut = std::f64::consts::PI / h * TRIAL_BAND;
    (0..n).map(|k| crate::grid_calculus::grid::fft_frequency(k, n, h)).filter(|f| f.abs() <= cut).collect()
}

impl TrialFunction {
    pub fn random(base: &SpacetimeGrid, rng: &mut impl rand::Rng) -> Self {
        let tau = band(base.nt, base.ht());
        let eta = band(base.ny, base.hy());
        let coeffs = (0..tau.len() * eta.len())
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        Self { base: *base, tau, eta, coeffs, taper: TRIAL_TAPER }
    }

    /// A batch of trials from a fixed seed.
    pub fn batch(base: &SpacetimeGrid, count: usize, seed: u64) -> Vec<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Self::random(base, &mut rng)).collect()
    }

    pub fn sample(&self, grid: &SpacetimeGrid) -> GridFunction {
        let (mt, my) = (self.tau.len(), self.eta.len());
        // Σ_b c_ab e^{iη_b y_j}, then Σ_a e^{iτ_a t_i} (·).
        let mut partial = vec![Complex64::new(0.0, 0.0); mt * grid.ny];
        for j in 0..grid.ny {
            let y = grid.y(j);
            let ey: Vec<Complex64> = self.eta.iter().map(|e| Complex64::from_polar(1.0, e * y)).collect();
            for a in 0..mt {
                partial[a * grid.ny + j] = (0..my).map(|b| self.coeffs[a * my + b] * ey[b]).sum();
            }
        }
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.split(k);
                let t = grid.t(i);
                let s: Complex64 = (0..mt).map(|a| Complex64::from_polar(1.0, self.tau[a] * t) * partial[a * grid.ny + j]).sum();
                s * self.taper.eval(&self.base, grid.point(k))
            })
            .collect();
        GridFunction { grid: *grid, values }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityFit {
    /// Smallest constant that makes every trial satisfy the inequality.
    pub constant: f64,
    pub worst_trial: usize,
    pub trials: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub coarse: InequalityFit,
    pub fine: InequalityFit,
    /// `fine / coarse`.
    pub ratio: f64,
    /// `|ratio − 1| ≤ 0.25`.
    pub stable: bool,
    /// `ratio > 1.25`.
    pub grows: bool,
}

impl StabilityVerdict {
    fn from_fits(coarse: InequalityFit, fine: InequalityFit) -> Self {
        let ratio = fine.constant / coarse.constant;
        Self { coarse, fine, ratio, stable: (ratio - 1.0).abs() <= STABILITY_BAND, grows: ratio > 1.0 + STABILITY_BAND }
    }
}

fn fit(ratios: impl Iterator<Item = f64>) -> InequalityFit {
    let mut best = InequalityFit { constant: 0.0, worst_trial: 0, trials: 0 };
    for (k, r) in ratios.enumerate() {
        best.trials += 1;
        if r > best.constant {
            best.constant = r;
            best.worst_trial = k;
        }
    }
    best
}

/// `|Im z| ‖u‖²_{k,l} / (‖(P−z)u‖²_{k,l}/|Im z| + ‖u‖²_{k+½,l−½})`: the
/// smallest `C` for which `u` satisfies the subelliptic inequality.
pub fn subelliptic_ratio(p: &GridOperator, z: Complex64, k: f64, l: f64, u: &GridFunction) -> f64 {
    let im = z.im.abs();
    let pu = p.apply(&u.values);
    let r = GridFunction { grid: u.grid, values: pu.iter().zip(&u.values).map(|(a, b)| a - z * b).collect() };
    let lhs = im * weighted_norm(u, k, l).powi(2);
    let rhs = weighted_norm(&r, k, l).powi(2) / im + weighted_norm(u, k + 0.5, l - 0.5).powi(2);
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// `‖u‖_{½, −(1+δ)/2} / (‖Pu‖ + ‖u‖)`.
pub fn local_compactness_ratio(p: &GridOperator, delta: f64, u: &GridFunction) -> f64 {
    let pu = GridFunction { grid: u.grid, values: p.apply(&u.values) };
    let lhs = weighted_norm(u, 0.5, -0.5 * (1.0 + delta));
    if lhs == 0.0 {
        0.0
    } else {
        lhs / (pu.norm() + u.norm())
    }
}

fn two_grids(field: &InverseMetricField, coarse: &SpacetimeGrid) -> Result<[GridOperator; 2], ResolventError> {
    Ok([assemble_p(field, coarse)?, assemble_p(field, &coarse.refined(2.0))?])
}

fn fit_on(p: &GridOperator, trials: &[TrialFunction], ratio: impl Fn(&GridOperator, &GridFunction) -> f64 + Sync) -> InequalityFit {
    fit(crate::par::map_slice(trials, |t| ratio(p, &t.sample(&p.grid))).into_iter())
}

/// Fits the subelliptic constant on `coarse` and on its doubling with the
/// same trial functions.
pub fn subelliptic_test(
    field: &InverseMetricField,
    coarse: &SpacetimeGrid,
    z: Complex64,
    k: f64,
    l: f64,
    trial_count: usize,
    seed: u64,
) -> Result<StabilityVerdict, ResolventError> {
    if z.im == 0.0 {
        return Err(ResolventError::Precondition("need Im z ≠ 0".into()));
    }
    let trials = TrialFunction::batch(coarse, trial_count, seed);
    let [pc, pf] = two_grids(field, coarse)?;
    let r = |p: &GridOperator, u: &GridFunction| subelliptic_ratio(p, z, k, l, u);
    Ok(StabilityVerdict::from_fits(fit_on(&pc, &trials, r), fit_on(&pf, &trials, r)))
}

/// Same protocol for `‖u‖_{½,−(1+δ)/2} ≤ C‖Pu‖ + C‖u‖`. `δ = 0` is allowed
/// as a control.
pub fn local_compactness_test(
    field: &InverseMetricField,
    coarse: &SpacetimeGrid,
    delta: f64,
    trial_count: usize,
    seed: u64,
) -> Result<StabilityVerdict, ResolventError> {
    if !(delta >= 0.0) {
        return Err(ResolventError::Precondition("need δ ≥ 0".into()));
    }
    let trials = TrialFunction::batch(coarse, trial_count, seed);
    let [pc, pf] = two_grids(field, coarse)?;
    let r = |p: &GridOperator, u: &GridFunction| local_compactness_ratio(p, delta, u);
    Ok(StabilityVerdict::from_fits(fit_on(&pc, &trials, r), fit_on(&pf, &trials, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::hermitian_eigen;

    #[test]
    fn trial_is_grid_independent() {
        let g = SpacetimeGrid::square(4.0, 16).unwrap();
        let t = &TrialFunction::batch(&g, 1, 9)[0];
        let a = t.sample(&g);
        let b = t.sample(&g.refined(2.0));
        // Points of the coarse grid are every other point of the fine one.
        for i in 0..g.nt {
            for j in 0..g.ny {
                let x = a.values[g.index(i, j)];
                let y = b.values[b.grid.index(2 * i, 2 * j)];
                assert!((x - y).norm() < 1e-9 * (1.0 + x.norm()));
            }
        }
        assert!(a.values[g.index(0, 5)].norm() < 1e-12);
    }

    #[test]
    fn eigenvector_ratio_is_at_most_one() {
        let g = SpacetimeGrid::square(3.0, 12).unwrap();
        let p = assemble_p(&InverseMetricField::flat(), &g).unwrap();
        let (_, vecs) = hermitian_eigen(&p.to_dense()).unwrap();
        for col in [0, 40, 100] {
            let u = GridFunction { grid: g, values: (0..g.len()).map(|i| vecs[(i, col)]).collect() };
            let r = subelliptic_ratio(&p, Complex64::new(0.3, 1.0), 0.0, 0.0, &u);
            assert!(r > 0.0 && r <= 1.0 + 1e-12, "{r}");
        }
    }

    #[test]
    fn real_shift_is_refused() {
        let g = SpacetimeGrid::square(3.0, 12).unwrap();
        let r = subelliptic_test(&InverseMetricField::flat(), &g, Complex64::new(1.0, 0.0), 0.0, 0.0, 2, 1);
        assert!(matches!(r, Err(ResolventError::Precondition(_))));
    }

    #[test]
    fn far_tail_is_slack() {
        let g = SpacetimeGrid::square(16.0, 64).unwrap();
        let p = assemble_p(&InverseMetricField::flat(), &g).unwrap();
        let bump = |c: [f64; 2]| GridFunction::from_fn(g, move |x| Complex64::new((-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp(), 0.0));
        let near = local_compactness_ratio(&p, 0.5, &bump([0.0, 0.0]));
        let far = local_compactness_ratio(&p, 0.5, &bump([10.0, 10.0]));
        assert!(far < 0.25 * near, "{far} vs {near}");
    }
}
