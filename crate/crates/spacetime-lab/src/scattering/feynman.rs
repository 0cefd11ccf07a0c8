//! The inverse of `P + m₀²` on solutions annihilated by `ρ_F`: a retarded
//! Duhamel solution plus the homogeneous solution that cancels its `ρ_F`
//! boundary value.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::boundary::{combine, rho_f, rho_f_homogeneous, BoundaryValue};
use super::evolve::{check_grid, lattice_index, Evolution, EvolutionKind, SolutionRecord};
use super::free::Sign;
use super::line::{CauchyDatum, LineGrid};
use super::ScatteringError;
use crate::grid_calculus::{assemble_p, GridFunction};
use crate::metric_symbols::InverseMetricField;
use crate::Complex64;

/// Condition number above which the boundary map counts as singular.
pub const COND_LIMIT: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundaryMapSolver {
    /// Assemble `h ↦ ρ_F(sol h)` column by column and factor it.
    Dense,
    /// Matrix-free GMRES on `h ↦ ρ_F(sol h)`, one homogeneous evolution
    /// per iteration.
    Iterative { max_iter: usize, tol: f64 },
}

/// `γ = 0.9·min(½ + μ, 1)`, kept inside `(½, 1)`.
pub fn default_gamma(mu: f64) -> f64 {
    (0.9 * (0.5 + mu).min(1.0)).clamp(0.5 + 1e-6, 1.0 - 1e-6)
}

#[derive(Clone, Debug)]
pub struct FeynmanSolution {
    pub evolution: Evolution,
    /// `u` on the source grid.
    pub u: GridFunction,
    /// `u` on `[−T, T + step]`.
    pub record: SolutionRecord,
    /// Datum of the homogeneous correction at `t = 0`.
    pub correction: CauchyDatum,
    pub t_max: f64,
    /// Condition number of the dense boundary map.
    pub cond: Option<f64>,
    pub iterations: usize,
    /// `‖(P_h + m₀²)u − f‖ / ‖f‖` over nodes off the box edge.
    pub residual: f64,
    pub rho: BoundaryValue,
}

fn boundary_map_dense(evo: &Evolution, n: i64) -> Result<Mat<Complex64>, ScatteringError> {
    let line = evo.line;
    let cols = crate::par::map_range(2 * line.n, |k| rho_f_homogeneous(evo, &CauchyDatum::basis(line, k), n).map(|d| d.stacked()));
    let cols = cols.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Mat::from_fn(2 * line.n, 2 * line.n, |i, j| cols[j][i]))
}

fn condition(m: &Mat<Complex64>) -> f64 {
    match m.singular_values() {
        Ok(s) if !s.is_empty() => {
            let (hi, lo) = (s.iter().cloned().fold(0.0, f64::max), s.iter().cloned().fold(f64::INFINITY, f64::min));
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => f64::INFINITY,
    }
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// GMRES from `x = 0` without restarts; returns the iterate, the iteration
/// count and the relative residual.
fn gmres(apply: impl Fn(&[Complex64]) -> Result<Vec<Complex64>, ScatteringError>, b: &[Complex64], max_iter: usize, tol: f64) -> Result<(Vec<Complex64>, usize, f64), ScatteringError> {
    let zero = Complex64::new(0.0, 0.0);
    let beta = vnorm(b);
    if beta == 0.0 {
        return Ok((vec![zero; b.len()], 0, 0.0));
    }
    let dot = |a: &[Complex64], c: &[Complex64]| a.iter().zip(c).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    let mut basis = vec![b.iter().map(|z| z / beta).collect::<Vec<_>>()];
    let mut hess: Vec<Vec<Complex64>> = Vec::new();
    let mut rot: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut rel = 1.0;
    for j in 0..max_iter.min(b.len()) {
        let mut w = apply(&basis[j])?;
        let mut col = vec![zero; j + 2];
        for (i, q) in basis.iter().enumerate() {
            col[i] = dot(q, &w);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= col[i] * y);
        }
        let wn = vnorm(&w);
        col[j + 1] = wn.into();
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, d) = (col[i], col[i + 1]);
            col[i] = c * a + s * d;
            col[i + 1] = -s.conj() * a + c * d;
        }
        let (a, d) = (col[j], col[j + 1]);
        let r = a.norm().hypot(d.norm());
        let phase = if a.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { a / a.norm() };
        let (c, s) = (a.norm() / r, phase * d.conj() / r);
        col[j] = phase * r;
        col[j + 1] = zero;
        rot.push((c, s));
        g.push(-s.conj() * g[j]);
        g[j] *= c;
        hess.push(col);
        rel = g[j + 1].norm() / beta;
        if rel <= tol || wn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|z| z / wn).collect());
    }
    let m = hess.len();
    let mut y = vec![zero; m];
    for i in (0..m).rev() {
        let s: Complex64 = (i + 1..m).map(|k| hess[k][i] * y[k]).sum();
        y[i] = (g[i] - s) / hess[i][i];
    }
    let mut x = vec![zero; b.len()];
    for (k, yk) in y.iter().enumerate() {
        x.iter_mut().zip(&basis[k]).for_each(|(a, q)| *a += yk * q);
    }
    Ok((x, m, rel))
}

/// Solves `(P₁ + m₀²)u = f` with `ρ_F^{(T)} u = 0`. The source grid fixes the
/// lattice: its `t` step is the marching step, its `y` axis the periodic line,
/// and `t = 0` one of its rows. `f` must vanish outside `(−T, T)`;
/// `NotConverged` is raised when `‖ρ_F^{(T/2)}u‖/‖ρ_0 u‖ > tol`.
pub fn feynman_inverse(field: &InverseMetricField, m0: f64, f: &GridFunction, t_max: f64, tol: f64, solver: BoundaryMapSolver) -> Result<FeynmanSolution, ScatteringError> {
    let grid = f.grid;
    let (line, step) = (LineGrid::of(&grid), grid.ht());
    let evo = Evolution::new(field, line, m0, step, EvolutionKind::Perturbed, t_max + step)?;
    check_grid(&grid, line, step)?;
    let n = lattice_index(t_max, step)?;
    if n < grid.nt as i64 / 2 {
        return Err(ScatteringError::Precondition("T must cover the source grid".into()));
    }
    let (lo, hi) = (-n, n + 1);
    let ret = evo.retarded(f, lo, hi)?;
    let b = combine(&evo, Sign::Plus, n, &ret.datum(&evo, n)?, &ret.datum(&evo, -n)?).stacked();
    let rhs: Vec<Complex64> = b.iter().map(|z| -z).collect();
    let (h, cond, iterations) = match solver {
        BoundaryMapSolver::Dense => {
            let m = boundary_map_dense(&evo, n)?;
            let cond = condition(&m);
            if !(cond < COND_LIMIT) {
                return Err(ScatteringError::SingularBoundaryMap { cond });
            }
            let r = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
            let x = m.partial_piv_lu().solve(&r);
            ((0..rhs.len()).map(|i| x[(i, 0)]).collect::<Vec<_>>(), Some(cond), 0)
        }
        BoundaryMapSolver::Iterative { max_iter, tol: it_tol } => {
            let apply = |h: &[Complex64]| rho_f_homogeneous(&evo, &CauchyDatum::from_stacked(line, h), n).map(|d| d.stacked());
            let (h, it, rel) = gmres(apply, &rhs, max_iter, it_tol)?;
            if rel > it_tol {
                return Err(ScatteringError::NotConverged { t_max, increments: vec![rel] });
            }
            (h, None, it)
        }
    };
    let correction = CauchyDatum::from_stacked(line, &h);
    let record = ret.add(&evo.homogeneous(&correction, lo, hi)?)?;
    let rho = rho_f(&evo, &record, t_max)?;
    if rho.scale > 0.0 && rho.change > tol * rho.scale {
        return Err(ScatteringError::NotConverged { t_max, increments: vec![rho.change / rho.scale] });
    }
    let u = record.on_grid(&grid)?;
    let residual = interior_residual(field, m0, &u, f)?;
    Ok(FeynmanSolution { evolution: evo, u, record, correction, t_max, cond, iterations, residual, rho })
}

/// `‖(P_h + m₀²)u − f‖/‖f‖` on nodes at least one step from the box edge.
pub fn interior_residual(field: &InverseMetricField, m0: f64, u: &GridFunction, f: &GridFunction) -> Result<f64, ScatteringError> {
    let g = u.grid;
    let p = assemble_p(field, &g)?;
    let pu = p.apply(&u.values);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..g.nt - 1 {
        for j in 1..g.ny - 1 {
            let k = g.index(i, j);
            num += (pu[k] + m0 * m0 * u.values[k] - f.values[k]).norm_sqr();
            den += f.values[k].norm_sqr();
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::SpacetimeGrid;
    use crate::metric_symbols::{make_perturbed_minkowski, MetricSpec};
    use std::f64::consts::PI;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(8.0, 8.0, 80, 64).unwrap()
    }

    fn source(g: SpacetimeGrid) -> GridFunction {
        GridFunction::from_fn(g, |x| {
            let s = x[0] / 3.0;
            let b = if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
            Complex64::new(b * (-x[1] * x[1] / 2.0).exp(), 0.0)
        })
    }

    /// Solution of `D_t²u + (Â² + m₀²)u = f` on the whole time lattice that
    /// oscillates as `e^{−iθ|n|}` away from the source, mode by mode in `y`,
    /// with plain DFTs.
    fn lattice_oracle(f: &GridFunction, m0: f64) -> Vec<Complex64> {
        let g = f.grid;
        let (nt, ny, k, h) = (g.nt, g.ny, g.ht(), g.hy());
        let i = Complex64::new(0.0, 1.0);
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for q in 0..ny {
            let a2 = (2.0 / h * (PI * q as f64 / ny as f64).sin()).powi(2) + m0 * m0;
            let theta = (1.0 - 0.5 * k * k * a2).acos();
            let c = i * k * k / (2.0 * theta.sin());
            let phase = |j: usize| Complex64::from_polar(1.0, -2.0 * PI * (q * j) as f64 / ny as f64);
            let fq: Vec<Complex64> = (0..nt).map(|n| (0..ny).map(|j| f.values[g.index(n, j)] * phase(j)).sum()).collect();
            for n in 0..nt {
                let un: Complex64 = (0..nt).map(|m| c * Complex64::from_polar(1.0, -theta * (n as f64 - m as f64).abs()) * fq[m]).sum();
                for j in 0..ny {
                    out[g.index(n, j)] += un * phase(j).conj() / ny as f64;
                }
            }
        }
        out
    }

    #[test]
    fn flat_solution_matches_the_lattice_green_function() {
        let f = source(grid());
        let sol = feynman_inverse(&InverseMetricField::flat(), 1.0, &f, 16.0, 1e-8, BoundaryMapSolver::Dense).unwrap();
        let want = lattice_oracle(&f, 1.0);
        let err: f64 = sol.u.values.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10 * scale, "{err} {scale}");
        assert!(sol.residual < 1e-12);
        assert!((sol.cond.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = grid();
        let sol = feynman_inverse(&InverseMetricField::flat(), 1.0, &GridFunction::zeros(g), 16.0, 1e-8, BoundaryMapSolver::Dense).unwrap();
        assert!(sol.u.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn bump_solution_solves_the_difference_equation() {
        let field = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 1.5)).unwrap();
        let f = source(grid());
        let sol = feynman_inverse(&field, 1.0, &f, 32.0, 0.05, BoundaryMapSolver::Dense).unwrap();
        assert!(sol.residual < 1e-10, "{}", sol.residual);
        assert!(sol.cond.unwrap() < 1e3);
        let rho = rho_f(&sol.evolution, &sol.record, 32.0).unwrap();
        assert!(rho.value.l2_norm() < 1e-10 * rho.scale);
    }

    #[test]
    fn iterative_and_dense_boundary_solves_agree() {
        let field = make_perturbed_minkowski(MetricSpec::bump(0.05, 2.0, 1.5)).unwrap();
        let f = source(grid());
        let dense = feynman_inverse(&field, 1.0, &f, 16.0, 0.5, BoundaryMapSolver::Dense).unwrap();
        let it = feynman_inverse(&field, 1.0, &f, 16.0, 0.5, BoundaryMapSolver::Iterative { max_iter: 200, tol: 1e-12 }).unwrap();
        assert!(it.iterations > 0);
        let d = dense.u.sub(&it.u).norm() / dense.u.norm();
        assert!(d < 1e-9, "{d} after {} iterations", it.iterations);
    }

    #[test]
    fn default_gamma_stays_inside_the_interval() {
        assert!((default_gamma(1.5) - 0.9).abs() < 1e-12);
        assert!((default_gamma(0.1) - 0.54).abs() < 1e-12);
        assert!(default_gamma(0.0) > 0.5);
    }
}
