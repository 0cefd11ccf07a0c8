//! Non-trapping certificates and past-incoming times.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::convexity::{check_convexity, ConvexityLattice};
use super::integrator::Solution;
use super::trajectory::{flow_until, to_point, FlowError};
use crate::metric_symbols::symbol::{beta, dot, dxi_symbol, eval_symbol, norm};
use crate::metric_symbols::{InverseMetricField, PhasePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("seed {seed:?} has not left |x| ≤ {radius} by |t| = {t_max} (λ₀ = {lambda0}); not a proof of trapping")]
    CertificationTimeout { seed: PhasePoint, radius: f64, t_max: f64, lambda0: f64 },
    #[error("radius {radius} is inside the convexity radius {r0}")]
    BelowConvexityRadius { radius: f64, r0: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    pub x_radii: usize,
    pub x_angles: usize,
    pub energy_levels: usize,
    pub t_max: f64,
    pub tol: f64,
    pub lambda0_start: f64,
    pub lambda0_min: f64,
    /// Every `spot_check_stride`-th seed is integrated on to `t_max` to
    /// confirm it stays outside.
    pub spot_check_stride: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            x_radii: 6,
            x_angles: 16,
            energy_levels: 3,
            t_max: 200.0,
            tol: 1e-9,
            lambda0_start: 0.5,
            lambda0_min: 1.0 / 256.0,
            spot_check_stride: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonTrappingCertificate {
    pub radius: f64,
    pub escape_time: f64,
    pub lambda0: f64,
    pub convexity_radius: f64,
    pub seed_count: usize,
    pub seed_description: String,
    pub max_drift: f64,
    pub timeouts: usize,
    pub spot_checked: usize,
    pub spot_check_returns: usize,
    pub t_max: f64,
    pub pass: bool,
}

/// Unit covectors at `x` with `p(x, ξ) = e`: on the unit circle
/// `p = m + ρ cos(2θ − φ)`, solved in closed form (four roots).
pub fn unit_covectors_at_energy(field: &InverseMetricField, x: [f64; 2], e: f64) -> Vec<[f64; 2]> {
    let g = field.inverse_metric(x);
    let m = 0.5 * (g[0][0] + g[1][1]);
    let a = 0.5 * (g[0][0] - g[1][1]);
    let b = g[0][1];
    let rho = a.hypot(b);
    let c = (e - m) / rho;
    if !(-1.0..=1.0).contains(&c) {
        return Vec::new();
    }
    let phi = b.atan2(a);
    let ac = c.acos();
    let mut out = Vec::with_capacity(4);
    for s in [1.0, -1.0] {
        for k in 0..2 {
            let th = 0.5 * (phi + s * ac) + std::f64::consts::PI * k as f64;
            out.push([th.cos(), th.sin()]);
        }
    }
    out
}

/// Equal-angle shells in `x` over the disc of radius `R`, four unit
/// covectors per energy level in `[−λ₀, λ₀]`.
pub fn shell_seeds(field: &InverseMetricField, radius: f64, lambda0: f64, opts: &CertifyOptions) -> Vec<PhasePoint> {
    let mut xs = vec![[0.0, 0.0]];
    for i in 1..=opts.x_radii {
        let r = radius * i as f64 / opts.x_radii as f64;
        for j in 0..opts.x_angles {
            let a = std::f64::consts::TAU * (j as f64 + 0.5 * (i % 2) as f64) / opts.x_angles as f64;
            xs.push([r * a.cos(), r * a.sin()]);
        }
    }
    let levels: Vec<f64> = if opts.energy_levels <= 1 {
        vec![0.0]
    } else {
        (0..opts.energy_levels).map(|j| lambda0 * (2.0 * j as f64 / (opts.energy_levels - 1) as f64 - 1.0)).collect()
    };
    let mut seeds = Vec::new();
    for x in xs {
        for &e in &levels {
            for xi in unit_covectors_at_energy(field, x, e) {
                seeds.push(PhasePoint::new(x, xi));
            }
        }
    }
    seeds
}

/// Bisects the last accepted step of a stopped run for the first time the
/// stop condition holds.
fn first_hit(sol: &Solution<4>, cond: impl Fn(&PhasePoint) -> bool) -> (f64, [f64; 4]) {
    let n = sol.times.len();
    let (mut lo, mut hi) = (if n >= 2 { sol.times[n - 2] } else { sol.times[0] }, sol.times[n - 1]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cond(&to_point(&sol.at(mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, sol.at(hi))
}

struct SeedRun {
    escape: [Option<f64>; 2],
    drift: f64,
    returned: bool,
}

fn run_seed(field: &InverseMetricField, seed: &PhasePoint, radius: f64, r0: f64, opts: &CertifyOptions, spot: bool) -> Result<SeedRun, FlowError> {
    let p0 = eval_symbol(field, seed);
    let mut out = SeedRun { escape: [None, None], drift: 0.0, returned: false };
    for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
        let cond = |p: &PhasePoint| {
            let nz = norm(p.x);
            nz > radius && nz >= r0 && dir * dot(p.x, dxi_symbol(field, p)) > 0.0
        };
        let sol = flow_until(field, seed, dir * opts.t_max, opts.tol, |_, p| cond(p))?;
        for s in &sol.states {
            let q = PhasePoint::new([s[0], s[1]], [s[2], s[3]]);
            out.drift = out.drift.max((eval_symbol(field, &q) - p0).abs());
        }
        if sol.stopped {
            let (t, y) = first_hit(&sol, cond);
            out.escape[k] = Some(t.abs());
            if spot && t.abs() < opts.t_max {
                let rest = flow_until(field, &PhasePoint::new([y[0], y[1]], [y[2], y[3]]), dir * (opts.t_max - t.abs()), opts.tol, |_, _| false)?;
                out.returned |= rest.states.iter().any(|s| s[0].hypot(s[1]) <= radius) || rest.segments.iter().any(|g| norm(to_point(&g.eval(0.5 * (g.t0 + g.t1()))).x) <= radius);
            }
        }
    }
    Ok(out)
}

/// Certifies that every seed of `p⁻¹([−λ₀, λ₀]) ∩ S*D_R` leaves `D_R` for
/// good in both time directions, halving `λ₀` until that holds.
pub fn certify_nontrapping(field: &InverseMetricField, radius: f64, opts: &CertifyOptions) -> Result<NonTrappingCertificate, CertError> {
    let conv = check_convexity(field, &ConvexityLattice::default());
    let r0 = conv.r0;
    if !(radius >= r0) {
        return Err(CertError::BelowConvexityRadius { radius, r0 });
    }
    let mut lambda0 = opts.lambda0_start;
    loop {
        let seeds = shell_seeds(field, radius, lambda0, opts);
        let runs = crate::par::map_range(seeds.len(), |i| run_seed(field, &seeds[i], radius, r0, opts, i % opts.spot_check_stride.max(1) == 0));
        let mut first_timeout = None;
        let mut t_esc: f64 = 0.0;
        let mut drift: f64 = 0.0;
        let mut timeouts = 0;
        let mut returns = 0;
        let mut spot = 0;
        for (i, r) in runs.into_iter().enumerate() {
            let r = r?;
            drift = drift.max(r.drift);
            if i % opts.spot_check_stride.max(1) == 0 {
                spot += 1;
            }
            returns += r.returned as usize;
            match r.escape {
                [Some(a), Some(b)] => t_esc = t_esc.max(a).max(b),
                _ => {
                    timeouts += 1;
                    first_timeout.get_or_insert(seeds[i]);
                }
            }
        }
        if first_timeout.is_none() {
            return Ok(NonTrappingCertificate {
                radius,
                escape_time: t_esc.max(1.0),
                lambda0,
                convexity_radius: r0,
                seed_count: seeds.len(),
                seed_description: format!(
                    "centre + {} radii x {} angles in |x| <= {radius}, {} energy levels in [-l0, l0], 4 unit covectors each",
                    opts.x_radii, opts.x_angles, opts.energy_levels
                ),
                max_drift: drift,
                timeouts,
                spot_checked: spot,
                spot_check_returns: returns,
                t_max: opts.t_max,
                pass: returns == 0,
            });
        }
        if lambda0 / 2.0 < opts.lambda0_min {
            return Err(CertError::CertificationTimeout { seed: first_timeout.unwrap(), radius, t_max: opts.t_max, lambda0 });
        }
        lambda0 /= 2.0;
    }
}

/// First `T > 0` with `|z(−T)| > R` and `β(z(−T), ζ(−T)) < −1 + ε` for a
/// null seed.
pub fn past_incoming_time(field: &InverseMetricField, seed: &PhasePoint, eps: f64, radius: f64, t_max: f64, tol: f64) -> Result<f64, CertError> {
    let n2 = dot(seed.xi, seed.xi);
    if n2 == 0.0 || eval_symbol(field, seed).abs() > 1e-8 * n2 {
        return Err(CertError::Flow(FlowError::Invalid("seed must be null with ξ ≠ 0".into())));
    }
    let cond = |p: &PhasePoint| norm(p.x) > radius && beta(field, p).map(|b| b < -1.0 + eps).unwrap_or(false);
    let sol = flow_until(field, seed, -t_max, tol, |_, p| cond(p))?;
    if !sol.stopped {
        return Err(CertError::CertificationTimeout { seed: *seed, radius, t_max, lambda0: 0.0 });
    }
    Ok(-first_hit(&sol, cond).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::{make_perturbed_minkowski, MetricSpec};

    #[test]
    fn seeds_sit_on_energy_levels() {
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.2, 2.0, 1.5) }).unwrap();
        let opts = CertifyOptions::default();
        let seeds = shell_seeds(&f, 10.0, 0.5, &opts);
        assert_eq!(seeds.len(), (1 + 6 * 16) * 3 * 4);
        for s in &seeds {
            let p = eval_symbol(&f, s);
            assert!((norm(s.xi) - 1.0).abs() < 1e-14);
            let nearest = [-0.5f64, 0.0, 0.5].iter().map(|e| (p - e).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12);
        }
    }

    #[test]
    fn flat_certificate() {
        let f = InverseMetricField::flat();
        let c = certify_nontrapping(&f, 10.0, &CertifyOptions::default()).unwrap();
        assert!(c.pass && c.lambda0 == 0.5 && c.timeouts == 0);
        // Slowest seeds on |ξ| = 1 move at speed 2|ξ| = 2 and cross at most 2R.
        assert!(c.escape_time <= 10.0 + 1e-6);
    }

    #[test]
    fn flat_past_incoming() {
        let f = InverseMetricField::flat();
        let t = past_incoming_time(&f, &PhasePoint::new([0.0, 0.0], [1.0, 1.0]), 0.01, 5.0, 100.0, 1e-10).unwrap();
        assert!((t - 5.0 / (2.0 * 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn slow_cone_exhausts_time_budget() {
        // Near the signature limit rays crawl out of a wide bump; a budget
        // that the weak bump of the same width meets easily runs out.
        let opts = CertifyOptions { t_max: 40.0, x_radii: 2, x_angles: 4, ..CertifyOptions::default() };
        let weak = make_perturbed_minkowski(MetricSpec::bump(0.1, 20.0, 1.5)).unwrap();
        assert!(certify_nontrapping(&weak, 10.0, &opts).unwrap().pass);
        let slow = make_perturbed_minkowski(MetricSpec::bump(0.999, 20.0, 1.5)).unwrap();
        assert!(matches!(certify_nontrapping(&slow, 10.0, &opts), Err(CertError::CertificationTimeout { .. })));
        let c = certify_nontrapping(&slow, 10.0, &CertifyOptions { t_max: 200.0, ..opts }).unwrap();
        assert!(c.pass && c.escape_time > 40.0);
    }
}
