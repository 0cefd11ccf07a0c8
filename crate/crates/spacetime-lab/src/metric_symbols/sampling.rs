//! Deterministic low-discrepancy samples for inequality sweeps.
//!
//! A Halton sequence in the first primes, shifted by a seeded
//! Cranley–Patterson rotation, plus the corners of the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u8; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Seeded, rotated Halton sequence in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct LowDiscrepancy {
    shift: Vec<f64>,
}

impl LowDiscrepancy {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "dimension out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self { shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The `i`-th point. Corners of the cube come first, then the rotated
    /// Halton points.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let d = self.dim();
        let corners = 1usize << d;
        if i < corners {
            return (0..d).map(|k| if (i >> k) & 1 == 1 { 1.0 - 1e-12 } else { 0.0 }).collect();
        }
        let idx = i - corners + 1;
        (0..d)
            .map(|k| {
                let v = halton::number(PRIMES[k], idx) + self.shift[k];
                v - v.floor()
            })
            .collect()
    }

    /// The first `n` points.
    pub fn take(&self, n: usize) -> Vec<Vec<f64>> {
        crate::par::map_range(n, |i| self.point(i))
    }
}

/// Maps `u ∈ [0,1]` log-uniformly onto `[lo, hi]`.
pub fn log_uniform(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

/// Maps `u ∈ [0,1]` uniformly onto `[lo, hi]`.
pub fn uniform(u: f64, lo: f64, hi: f64) -> f64 {
    lo + u * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_in_unit_cube_and_reproducible() {
        let a = LowDiscrepancy::new(4, 7);
        let b = LowDiscrepancy::new(4, 7);
        for i in 0..200 {
            let p = a.point(i);
            assert_eq!(p, b.point(i));
            assert!(p.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
        assert_eq!(a.point(0), vec![0.0; 4]);
    }

    #[test]
    fn fills_cube_evenly() {
        let s = LowDiscrepancy::new(2, 1);
        let n = 4096;
        let inside = (0..n)
            .filter(|&i| {
                let p = s.point(i);
                p[0] < 0.5 && p[1] < 0.5
            })
            .count();
        assert!((inside as f64 / n as f64 - 0.25).abs() < 0.01);
    }
}

use super::field::InverseMetricField;
use super::symbol::{norm, PhasePoint};

/// Phase point with `x = |x|(cos φ, sin φ)`, `|ξ| = xi_norm` and
/// `β(x, ξ) = beta` (to rounding), obtained by choosing the velocity
/// `∂_ξp` at angle `±arccos β` from `x` and solving `2g(x)ξ = v`.
pub fn point_with_beta(field: &InverseMetricField, x_norm: f64, phi: f64, beta: f64, upper: bool, xi_norm: f64) -> PhasePoint {
    let x = [x_norm * phi.cos(), x_norm * phi.sin()];
    let th = beta.clamp(-1.0, 1.0).acos();
    let ang = if upper { phi + th } else { phi - th };
    let v = [ang.cos(), ang.sin()];
    let m = field.metric(x);
    let xi = [0.5 * (m[0][0] * v[0] + m[0][1] * v[1]), 0.5 * (m[1][0] * v[0] + m[1][1] * v[1])];
    let s = xi_norm / norm(xi);
    PhasePoint::new(x, [xi[0] * s, xi[1] * s])
}
