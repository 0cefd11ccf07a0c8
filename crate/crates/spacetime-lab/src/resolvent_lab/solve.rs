//! Sparse factorisation of `P_h − iW − z`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use super::cap::CapSpec;
use super::ResolventError;
use crate::grid_calculus::{Csr, GridFunction, GridOperator, SpacetimeGrid};
use crate::Complex64;

/// Relative residual accepted after at most one refinement step.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// `P_h − iW − z` together with its LU factors.
pub struct ShiftedSystem {
    pub grid: SpacetimeGrid,
    pub z: Complex64,
    matrix: Csr,
    lu: Lu<usize, Complex64>,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl ShiftedSystem {
    /// Factors `P_h − iW − z` for an explicit absorber profile. A negative
    /// profile gives the conjugated (incoming) system.
    pub fn with_absorber(p: &GridOperator, absorber: &[f64], z: Complex64) -> Result<Self, ResolventError> {
        let csr = p.as_csr().ok_or_else(|| ResolventError::Precondition("operator must be sparse".into()))?;
        if absorber.len() != csr.n {
            return Err(ResolventError::Precondition("absorber length does not match the grid".into()));
        }
        if z.im == 0.0 && absorber.iter().all(|w| *w == 0.0) {
            return Err(ResolventError::Precondition("need Im z ≠ 0 or a nonzero absorber".into()));
        }
        let shift: Vec<Complex64> = absorber.iter().map(|w| Complex64::new(0.0, -w) - z).collect();
        let matrix = csr.plus_diagonal(&shift);
        let lu = matrix.to_faer().sp_lu().map_err(|_| ResolventError::SingularSystem { residual: f64::INFINITY, cond_estimate: f64::INFINITY })?;
        Ok(Self { grid: p.grid, z, matrix, lu })
    }

    pub fn new(p: &GridOperator, cap: &CapSpec, z: Complex64) -> Result<Self, ResolventError> {
        cap.validate(&p.grid)?;
        Self::with_absorber(p, &cap.absorber(&p.grid), z)
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    fn raw_solve(&self, f: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let mut m = Mat::from_fn(f.len(), 1, |i, _| f[i]);
        if adjoint {
            self.lu.solve_adjoint_in_place(m.as_mut());
        } else {
            self.lu.solve_in_place(m.as_mut());
        }
        (0..f.len()).map(|i| m[(i, 0)]).collect()
    }

    fn residual(&self, u: &[Complex64], f: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let au = if adjoint { self.apply_adjoint(u) } else { self.matrix.apply(u) };
        au.iter().zip(f).map(|(a, b)| a - b).collect()
    }

    /// `(P_h − iW − z)† u`.
    pub fn apply_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
        for (r, c, v) in self.matrix.triplets() {
            out[c] += v.conj() * u[r];
        }
        out
    }

    fn checked(&self, f: &[Complex64], adjoint: bool) -> Result<Vec<Complex64>, ResolventError> {
        let nf = norm2(f);
        if nf == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); f.len()]);
        }
        let mut u = self.raw_solve(f, adjoint);
        let mut r = self.residual(&u, f, adjoint);
        if norm2(&r) > RESIDUAL_TOL * nf {
            let du = self.raw_solve(&r, adjoint);
            u.iter_mut().zip(&du).for_each(|(a, b)| *a -= b);
            r = self.residual(&u, f, adjoint);
        }
        let rel = norm2(&r) / nf;
        if !(rel <= RESIDUAL_TOL) {
            let inf = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let a_inf = (0..self.matrix.n)
                .map(|i| self.matrix.val[self.matrix.row_ptr[i]..self.matrix.row_ptr[i + 1]].iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max);
            return Err(ResolventError::SingularSystem { residual: rel, cond_estimate: a_inf * inf(&u) / inf(f) });
        }
        Ok(u)
    }

    /// `(P_h − iW − z)^{−1} f` with a relative residual check.
    pub fn solve(&self, f: &[Complex64]) -> Result<Vec<Complex64>, ResolventError> {
        self.checked(f, false)
    }

    /// `((P_h − iW − z)†)^{−1} f`.
    pub fn solve_adjoint(&self, f: &[Complex64]) -> Result<Vec<Complex64>, ResolventError> {
        self.checked(f, true)
    }
}

/// Solves `(P_h − iW − z) u = f`.
pub fn solve_resolvent(p: &GridOperator, cap: &CapSpec, z: Complex64, f: &GridFunction) -> Result<GridFunction, ResolventError> {
    if f.grid != p.grid {
        return Err(ResolventError::Precondition("right-hand side lives on a different grid".into()));
    }
    let sys = ShiftedSystem::new(p, cap, z)?;
    Ok(GridFunction { grid: p.grid, values: sys.solve(&f.values)? })
}
