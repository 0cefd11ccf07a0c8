//! Largest singular value by power iteration on `K†K`.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ResolventError;
use crate::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerOptions {
    /// Stop once the estimate changes by less than this fraction.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iter: 1000, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub last_change: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖K‖₂` for an operator given by its action and the action of its adjoint.
pub fn operator_norm<F, G>(n: usize, apply: F, apply_adjoint: G, opts: &PowerOptions) -> Result<NormEstimate, ResolventError>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>, ResolventError>,
    G: Fn(&[Complex64]) -> Result<Vec<Complex64>, ResolventError>,
{
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut prev = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = apply(&v)?;
        let sigma = norm2(&w);
        if sigma == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, last_change: 0.0 });
        }
        change = (sigma - prev).abs() / sigma;
        if change < opts.tol {
            return Ok(NormEstimate { value: sigma, iterations: it, last_change: change });
        }
        prev = sigma;
        let mut back = apply_adjoint(&w)?;
        let nb = norm2(&back);
        back.iter_mut().for_each(|z| *z /= nb);
        v = back;
    }
    Err(ResolventError::PowerIterationStall { iterations: opts.max_iter, estimate: prev, last_change: change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm() {
        let d = [0.5, -3.0, 2.0, 1.0];
        let apply = |x: &[Complex64]| Ok(x.iter().zip(&d).map(|(a, b)| a * b).collect());
        let est = operator_norm(4, apply, apply, &PowerOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert!((est.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn nilpotent_block_uses_adjoint() {
        // K e₁ = 2 e₀: the norm is 2 and only shows up through K†.
        let apply = |x: &[Complex64]| Ok(vec![2.0 * x[1], Complex64::new(0.0, 0.0)]);
        let adj = |x: &[Complex64]| Ok(vec![Complex64::new(0.0, 0.0), 2.0 * x[0]]);
        let est = operator_norm(2, apply, adj, &PowerOptions::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stall_is_reported() {
        let d = [1.0, 0.999_999];
        let apply = |x: &[Complex64]| Ok(x.iter().zip(&d).map(|(a, b)| a * b).collect());
        let opts = PowerOptions { tol: 0.0, max_iter: 5, seed: 1 };
        assert!(matches!(operator_norm(2, apply, apply, &opts), Err(ResolventError::PowerIterationStall { .. })));
    }
}
