//! Sampled positivity of `H_pβ` and the ellipticity constants of
//! `D_t ∓ √(−Δ+m₀²)` on the incoming mass shell.

use serde::{Deserialize, Serialize};

use super::field::InverseMetricField;
use super::region::RegionSpec;
use super::sampling::{log_uniform, point_with_beta, uniform, LowDiscrepancy};
use super::symbol::{hp_beta, jap, norm, xi_tilde, PhasePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccposiReport {
    pub eps0: f64,
    pub big_r: f64,
    pub c4: f64,
    pub samples: usize,
    pub worst_point: Option<PhasePoint>,
    pub pass: bool,
}

/// `C₄ = min H_pβ·⟨x⟩/|ξ|` over `|x| ∈ [R, 10³R]`, `β ∈ [−1+ε₀, 1−ε₀]`,
/// `|ξ| = 1`.
pub fn verify_accposi(field: &InverseMetricField, eps0: f64, big_r: f64, samples: usize, seed: u64) -> AccposiReport {
    let seq = LowDiscrepancy::new(4, seed);
    let vals = crate::par::map_range(samples, |i| {
        let u = seq.point(i);
        let pt = point_with_beta(
            field,
            log_uniform(u[0], big_r, 1e3 * big_r),
            uniform(u[1], 0.0, std::f64::consts::TAU),
            uniform(u[2], -1.0 + eps0, 1.0 - eps0),
            u[3] < 0.5,
            1.0,
        );
        let v = hp_beta(field, &pt).map(|h| h * jap(pt.x) / norm(pt.xi)).unwrap_or(f64::NEG_INFINITY);
        (v, pt)
    });
    let (c4, worst) = vals.iter().fold((f64::INFINITY, None), |acc, (v, p)| if *v < acc.0 { (*v, Some(*p)) } else { acc });
    AccposiReport { eps0, big_r, c4, samples, worst_point: worst, pass: c4 > 0.0 && c4.is_finite() }
}

/// Smallest `R` on the doubling ladder `R₀·2^k` (up to `R_max`) at which
/// accposi passes.
pub fn accposi_radius(field: &InverseMetricField, eps0: f64, r0: f64, r_max: f64, samples: usize, seed: u64) -> Option<f64> {
    let mut r = r0;
    while r <= r_max {
        if verify_accposi(field, eps0, r, samples, seed).pass {
            return Some(r);
        }
        r *= 2.0;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub eps: f64,
    pub big_r: f64,
    pub m0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub samples: usize,
    pub proposals: usize,
    /// Largest ε on the 0.05-ladder for which all three constants stay
    /// positive on a coarse sample.
    pub eps_threshold: f64,
    pub pass: bool,
}

/// Minimum of the three ratios over the accepted sample, with the sign
/// case chosen by the sign of `t` (`t = 0` counts for both).
fn ellipticity_constants(eps: f64, big_r: f64, m0: f64, want: usize, seed: u64) -> (f64, f64, f64, usize, usize) {
    let region = RegionSpec::mass_shell_incoming(eps, big_r, m0);
    let flat = InverseMetricField::flat();
    let seq = LowDiscrepancy::new(6, seed);
    let th_max = (1.0 - eps).clamp(-1.0, 1.0).acos();
    let batch = want.max(64);
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    let mut mins = [f64::INFINITY; 3];
    let mut start = 0usize;
    while accepted < want && proposals < 200 * want.max(1) {
        let rows = crate::par::map_range(batch, |j| {
            let u = seq.point(start + j);
            let eta = log_uniform(u[0], 1e-3, 1e3) * if u[1] < 0.5 { -1.0 } else { 1.0 };
            let s = uniform(u[2], -1.0, 1.0);
            let tau_abs = ((eta * eta * (1.0 + s * eps) + m0 * m0) / (1.0 - s * eps)).sqrt();
            let tau = if u[3] < 0.5 { -tau_abs } else { tau_abs };
            let xi = [tau, eta];
            let xt = xi_tilde(xi);
            let base = (-xt[1]).atan2(-xt[0]);
            let ang = base + uniform(u[4], -th_max, th_max);
            let rx = log_uniform(u[5], big_r, 1e3 * big_r);
            let pt = PhasePoint::new([rx * ang.cos(), rx * ang.sin()], xi);
            if !region.contains(&flat, &pt) {
                return None;
            }
            let (t, nx, nxi) = (pt.x[0], norm(pt.x), norm(xi));
            let root = (eta * eta + m0 * m0).sqrt();
            let mut out = [f64::INFINITY; 3];
            if t <= 0.0 {
                out[0] = out[0].min(-tau / nxi);
                out[1] = out[1].min(-t / nx);
                out[2] = out[2].min((tau - root).abs() / (1.0 + nxi));
            }
            if t >= 0.0 {
                out[0] = out[0].min(tau / nxi);
                out[1] = out[1].min(t / nx);
                out[2] = out[2].min((tau + root).abs() / (1.0 + nxi));
            }
            Some(out)
        });
        for row in rows.into_iter().flatten() {
            if accepted == want {
                break;
            }
            accepted += 1;
            for k in 0..3 {
                mins[k] = mins[k].min(row[k]);
            }
        }
        proposals += batch;
        start += batch;
    }
    (mins[0], mins[1], mins[2], accepted, proposals)
}

/// Sample minima of `c₁, c₂, c₃` over the incoming mass-shell region split
/// by the sign of `t`.
pub fn incoming_ellipticity_check(eps: f64, big_r: f64, m0: f64, samples: usize, seed: u64) -> EllipticityReport {
    let (c1, c2, c3, n, proposals) = ellipticity_constants(eps, big_r, m0, samples, seed);
    let mut eps_threshold = 0.0;
    for k in 1..20 {
        let e = 0.05 * k as f64;
        let (a, b, c, m, _) = ellipticity_constants(e, big_r, m0, 2000, seed ^ 0x7e5);
        if m > 0 && a > 0.0 && b > 0.0 && c > 0.0 {
            eps_threshold = e;
        } else {
            break;
        }
    }
    EllipticityReport {
        eps,
        big_r,
        m0,
        c1,
        c2,
        c3,
        samples: n,
        proposals,
        eps_threshold,
        pass: n == samples && c1 > 0.0 && c2 > 0.0 && c3 > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::field::{make_perturbed_minkowski, MetricSpec};

    #[test]
    fn flat_accposi_matches_closed_form_bound() {
        let f = InverseMetricField::flat();
        let rep = verify_accposi(&f, 0.1, 10.0, 5000, 1);
        assert!(rep.pass);
        // H_p₀β₀⟨x⟩ = 2(1−β²)⟨x⟩/|x| ≥ 2(1 − 0.9²).
        assert!(rep.c4 >= 2.0 * (1.0 - 0.81) - 1e-9);
        assert!(rep.c4 < 2.0 * (1.0 - 0.81) * 1.05);
    }

    #[test]
    fn strong_bump_needs_larger_radius() {
        let f = make_perturbed_minkowski(MetricSpec { bump_center: [4.0, 0.0], ..MetricSpec::bump(0.8, 0.7, 1.5) }).unwrap();
        assert!(!verify_accposi(&f, 0.1, 1.0, 20000, 1).pass);
        let r = accposi_radius(&f, 0.1, 1.0, 256.0, 20000, 1).expect("passes eventually");
        assert!(r > 1.0);
    }

    #[test]
    fn ellipticity_small_and_large_eps() {
        let ok = incoming_ellipticity_check(0.05, 1.0, 1.0, 5000, 4);
        assert!(ok.pass, "{ok:?}");
        assert!(ok.eps_threshold >= 0.05);
        let bad = incoming_ellipticity_check(0.95, 1.0, 1.0, 5000, 4);
        assert!(!bad.pass);
    }
}
