//! Localised commutator `φ(P_h)[P_h, iA_h]φ(P_h)` on `ran φ(P_h)`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::ResolventError;
use crate::grid_calculus::{hermitian_eigen, GridOperator, WindowSpec, DENSE_LIMIT};
use crate::metric_symbols::CONJUGATE_BRACKET_CONSTANT;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MourreReport {
    pub window: WindowSpec,
    pub dim: usize,
    /// Number of eigenvectors of `P_h` with `φ(λ) > 0`.
    pub rank: usize,
    /// Flat bracket `{p₀, a}` minimised over the energy shells in the window.
    pub bracket_infimum: f64,
    /// Half of the bracket infimum.
    pub threshold: f64,
    /// Eigenvalues of the compressed, localised commutator (ascending).
    pub eigenvalues: Vec<f64>,
    /// Negative inertia of `φ[P, iA]φ − c φ²` on `ran φ`: the number of
    /// directions in which the estimate with constant `c` fails.
    pub below_threshold: usize,
    pub negative_count: usize,
    pub window_excludes_zero: bool,
}

/// `i(PA − AP)` as a dense matrix.
pub fn commutator_matrix(p: &GridOperator, a: &GridOperator) -> Mat<Complex64> {
    let pd = p.to_dense();
    let ad = a.to_dense();
    let pa = &pd * &ad;
    let ap = &ad * &pd;
    Mat::from_fn(pd.nrows(), pd.ncols(), |i, j| Complex64::new(0.0, 1.0) * (pa[(i, j)] - ap[(i, j)]))
}

/// Infimum of `{p₀, a} = K|ξ|²/(1 + |ξ|²)` over `p₀ = λ`, `λ ∈ supp φ`, using
/// `|ξ|² ≥ |λ|` on the shell.
pub fn flat_bracket_infimum(window: &WindowSpec) -> f64 {
    let m = match *window {
        WindowSpec::All => 0.0,
        WindowSpec::Band { lo, hi, ramp } => {
            let (a, b) = (lo - ramp, hi + ramp);
            if a <= 0.0 && b >= 0.0 {
                0.0
            } else {
                a.abs().min(b.abs())
            }
        }
    };
    CONJUGATE_BRACKET_CONSTANT * m / (1.0 + m)
}

pub fn mourre_experiment(p: &GridOperator, a: &GridOperator, window: &WindowSpec) -> Result<MourreReport, ResolventError> {
    let n = p.dim();
    if n > DENSE_LIMIT {
        return Err(ResolventError::Size { n, max: DENSE_LIMIT });
    }
    if a.grid != p.grid {
        return Err(ResolventError::Precondition("conjugate operator lives on a different grid".into()));
    }
    let (vals, vecs) = hermitian_eigen(&p.to_dense())?;
    let keep: Vec<usize> = (0..n).filter(|&k| window.eval(vals[k]) > 0.0).collect();
    let k = keep.len();
    let u = Mat::from_fn(n, k, |i, j| vecs[(i, keep[j])]);
    let au = &a.to_dense() * &u;
    let a_hat = u.adjoint() * &au;
    let lam: Vec<f64> = keep.iter().map(|&j| vals[j]).collect();
    let phi: Vec<f64> = lam.iter().map(|&l| window.eval(l)).collect();
    // In the eigenbasis of P the commutator is i(λ_a − λ_b) Â_ab.
    let b = Mat::from_fn(k, k, |r, c| Complex64::new(0.0, lam[r] - lam[c]) * a_hat[(r, c)]);
    let localized = Mat::from_fn(k, k, |r, c| b[(r, c)] * (phi[r] * phi[c]));
    let bracket_infimum = flat_bracket_infimum(window);
    let threshold = 0.5 * bracket_infimum;
    let (eigenvalues, b_eigs) = if k == 0 {
        (Vec::new(), Vec::new())
    } else {
        (hermitian_eigen(&localized)?.0, hermitian_eigen(&b)?.0)
    };
    Ok(MourreReport {
        window: *window,
        dim: n,
        rank: k,
        bracket_infimum,
        threshold,
        below_threshold: b_eigs.iter().filter(|&&e| e < threshold).count(),
        negative_count: eigenvalues.iter().filter(|&&e| e < 0.0).count(),
        eigenvalues,
        window_excludes_zero: window.excludes_zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::{assemble_p, quantize_weyl, SpacetimeGrid};
    use crate::metric_symbols::{conjugate_symbol, InverseMetricField};

    #[test]
    fn self_commutator_vanishes() {
        let g = SpacetimeGrid::square(3.0, 10).unwrap();
        let p = assemble_p(&InverseMetricField::flat(), &g).unwrap();
        let c = commutator_matrix(&p, &p);
        let worst = (0..c.nrows()).flat_map(|i| (0..c.ncols()).map(move |j| (i, j))).map(|(i, j)| c[(i, j)].norm()).fold(0.0, f64::max);
        assert_eq!(worst, 0.0);
        let r = mourre_experiment(&p, &p, &WindowSpec::band(0.5, 1.5, 0.25)).unwrap();
        assert!(r.eigenvalues.iter().all(|e| e.abs() < 1e-9));
    }

    #[test]
    fn compressed_commutator_matches_dense_product() {
        let g = SpacetimeGrid::square(3.0, 10).unwrap();
        let p = assemble_p(&InverseMetricField::flat(), &g).unwrap();
        let a = quantize_weyl(&g, conjugate_symbol);
        let w = WindowSpec::All;
        let r = mourre_experiment(&p, &a, &w).unwrap();
        let (direct, _) = hermitian_eigen(&commutator_matrix(&p, &a)).unwrap();
        assert_eq!(r.rank, g.len());
        for (x, y) in r.eigenvalues.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-8 * (1.0 + y.abs()), "{x} {y}");
        }
    }

    #[test]
    fn threshold_is_positive_away_from_zero() {
        assert!((flat_bracket_infimum(&WindowSpec::band(0.5, 1.5, 0.25)) - 2.0 * 0.25 / 1.25).abs() < 1e-15);
        assert_eq!(flat_bracket_infimum(&WindowSpec::band(-0.5, 0.5, 0.1)), 0.0);
        assert_eq!(flat_bracket_infimum(&WindowSpec::All), 0.0);
    }
}
