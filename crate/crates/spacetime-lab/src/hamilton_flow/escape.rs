//! Global escape function `q = L·q₁ + q₂` on the cone
//! `C_{λ₀} = {|ξ| ≥ 1, |p| < λ₀|ξ|²}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::certify::{unit_covectors_at_energy, NonTrappingCertificate};
use super::integrator::integrate;
use super::trajectory::{flow_options, flow_until, rhs, to_point, to_state, FlowError};
use crate::metric_symbols::cutoff::{chi, chibar};
use crate::metric_symbols::sampling::{log_uniform, uniform, LowDiscrepancy};
use crate::metric_symbols::symbol::{beta, dot, dxi_symbol, eval_symbol, hp_beta, hp_norm_x, jap, norm};
use crate::metric_symbols::weight::{calibration_count, MAX_REPORTED};
use crate::metric_symbols::{InverseMetricField, PhasePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EscapeError {
    #[error("point {pt:?} is outside the cone |ξ| ≥ 1, |p| < {lambda0}|ξ|²")]
    OutsideCone { pt: PhasePoint, lambda0: f64 },
    #[error("need 0 < 2δ < μ, got δ = {delta}, μ = {mu}")]
    InvalidDelta { delta: f64, mu: f64 },
    #[error("certificate did not pass")]
    NotCertified,
    #[error("trajectory from {pt:?} did not leave |x| ≤ {radius} by t = {t_max}")]
    Timeout { pt: PhasePoint, radius: f64, t_max: f64 },
    #[error("no radius up to {m_max} makes H_p(βF) positive on the sample")]
    NoRadius { m_max: f64 },
    #[error("L-doubling did not terminate by L = {l}")]
    NoL { l: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeOptions {
    /// Integrator tolerance for the `q₂` quadrature.
    pub tol: f64,
    /// Differencing step along the flow for `|ξ| = 1`; scaled by `1/|ξ|`.
    pub h: f64,
    /// `|x|` is drawn log-uniformly from this range.
    pub x_range: (f64, f64),
    /// `|ξ|` is drawn log-uniformly from this range.
    pub xi_range: (f64, f64),
    pub calibration_seed: u64,
    pub max_doublings: usize,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        Self { tol: 1e-10, h: 1e-3, x_range: (1e-2, 1e4), xi_range: (1.0, 1e3), calibration_seed: 0xe5ca_9e, max_doublings: 40 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeFunction {
    field: InverseMetricField,
    pub m: f64,
    pub l: f64,
    pub delta: f64,
    pub lambda0: f64,
    /// Convexity radius; trajectories are cut once outside `max(2M, R₀)`
    /// and moving outward.
    pub r0: f64,
    /// Cap on the `q₂` quadrature time for `|ξ| = 1`.
    pub t_max: f64,
    pub opts: EscapeOptions,
}

/// `∫₁^{2s} σ^{−1−δ} dσ` and its `s`-derivative.
fn log_like(s: f64, delta: f64) -> (f64, f64) {
    ((1.0 - (2.0 * s).powf(-delta)) / delta, 2.0 * (2.0 * s).powf(-1.0 - delta))
}

pub fn in_cone(field: &InverseMetricField, pt: &PhasePoint, lambda0: f64) -> bool {
    let n2 = dot(pt.xi, pt.xi);
    n2 >= 1.0 - 1e-12 && eval_symbol(field, pt).abs() < lambda0 * n2
}

impl EscapeFunction {
    /// Escape function with explicit `M` and `L`.
    pub fn new(field: &InverseMetricField, cert: &NonTrappingCertificate, delta: f64, m: f64, l: f64, opts: EscapeOptions) -> Result<Self, EscapeError> {
        let mu = field.decay();
        if !(delta > 0.0 && 2.0 * delta < mu) {
            return Err(EscapeError::InvalidDelta { delta, mu });
        }
        if !cert.pass {
            return Err(EscapeError::NotCertified);
        }
        Ok(Self {
            field: field.clone(),
            m: m.max(1.0),
            l,
            delta,
            lambda0: cert.lambda0,
            r0: cert.convexity_radius,
            t_max: cert.t_max,
            opts,
        })
    }

    pub fn field(&self) -> &InverseMetricField {
        &self.field
    }

    fn check(&self, pt: &PhasePoint) -> Result<(), EscapeError> {
        if in_cone(&self.field, pt, self.lambda0) {
            Ok(())
        } else {
            Err(EscapeError::OutsideCone { pt: *pt, lambda0: self.lambda0 })
        }
    }

    /// `q₁ = β·∫₁^{2|x|}s^{−1−δ}ds·χ̄_M(|x|)`.
    pub fn q1(&self, pt: &PhasePoint) -> f64 {
        let r = norm(pt.x);
        if r <= self.m {
            return 0.0;
        }
        let b = beta(&self.field, pt).unwrap_or(0.0);
        b * log_like(r, self.delta).0 * chibar(r, self.m).0
    }

    /// `H_p(β·∫₁^{2|x|}s^{−1−δ}ds)` in closed form.
    pub fn hp_beta_log(&self, pt: &PhasePoint) -> f64 {
        let r = norm(pt.x);
        let (f, df) = log_like(r, self.delta);
        let b = beta(&self.field, pt).unwrap_or(0.0);
        hp_beta(&self.field, pt).unwrap_or(0.0) * f + b * df * hp_norm_x(&self.field, pt)
    }

    fn integrand(&self, s: &[f64; 5]) -> f64 {
        let z = norm([s[0], s[1]]);
        let c = chi(z / self.m).0;
        if c == 0.0 {
            0.0
        } else {
            c * jap([s[0], s[1]]).powf(-1.0 - self.delta) * norm([s[2], s[3]])
        }
    }

    fn escaped(&self, s: &[f64; 4]) -> bool {
        let pt = to_point(s);
        let r = norm(pt.x);
        r > (2.0 * self.m).max(self.r0) && dot(pt.x, dxi_symbol(&self.field, &pt)) > 0.0
    }

    /// `∫₀^t` of the `q₂` integrand along the flow from `pt`, first up to
    /// `t_split` and then until escape. Returns the two partial integrals
    /// and the state at `t_split`.
    fn quadrature(&self, pt: &PhasePoint, t_split: f64) -> Result<(f64, f64, [f64; 4]), EscapeError> {
        let opts = flow_options(pt, self.opts.tol);
        let aug = |s: &[f64; 5]| {
            let d = rhs(&self.field, &[s[0], s[1], s[2], s[3]]);
            [d[0], d[1], d[2], d[3], self.integrand(s)]
        };
        let inv = |s: &[f64; 5]| eval_symbol(&self.field, &to_point(&s[..4]));
        let s0 = to_state(pt);
        let y0 = [s0[0], s0[1], s0[2], s0[3], 0.0];
        let first = integrate(aug, y0, 0.0, t_split, &opts, inv, |_, _| false).map_err(FlowError::from)?;
        let (_, y1) = first.last();
        let mid = [y1[0], y1[1], y1[2], y1[3]];
        if self.escaped(&mid) {
            return Ok((y1[4], 0.0, mid));
        }
        let t_max = self.t_max / norm(pt.xi);
        let second = integrate(aug, [y1[0], y1[1], y1[2], y1[3], 0.0], 0.0, t_max, &opts, inv, |_, s| {
            self.escaped(&[s[0], s[1], s[2], s[3]])
        })
        .map_err(FlowError::from)?;
        if !second.stopped {
            return Err(EscapeError::Timeout { pt: *pt, radius: 2.0 * self.m, t_max });
        }
        Ok((y1[4], second.last().1[4], mid))
    }

    /// `∫₀^∞ χ_M(|z|)⟨z⟩^{−1−δ}|ζ| dt`.
    pub fn a0(&self, pt: &PhasePoint) -> Result<f64, EscapeError> {
        if self.escaped(&to_state(pt)) {
            return Ok(0.0);
        }
        let (a, b, _) = self.quadrature(pt, 0.0)?;
        Ok(a + b)
    }

    /// `q₂ = −χ_{2M}(|x|)·∫₀^∞ χ_M(|z|)⟨z⟩^{−1−δ}|ζ| dt`.
    pub fn q2(&self, pt: &PhasePoint) -> Result<f64, EscapeError> {
        let c = chi(norm(pt.x) / (2.0 * self.m)).0;
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(-c * self.a0(pt)?)
    }

    pub fn q(&self, pt: &PhasePoint) -> Result<f64, EscapeError> {
        self.check(pt)?;
        Ok(self.l * self.q1(pt) + self.q2(pt)?)
    }

    /// `(H_pq₁, H_pq₂)` by symmetric differencing along the flow over
    /// `[−h, h]`, `h = opts.h/|ξ|`.
    pub fn hp_parts(&self, pt: &PhasePoint) -> Result<(f64, f64), EscapeError> {
        self.check(pt)?;
        let h = self.opts.h / norm(pt.xi);
        let back = flow_until(&self.field, pt, -h, self.opts.tol, |_, _| false)?;
        let a = to_point(&back.last().1);
        let fwd = flow_until(&self.field, pt, h, self.opts.tol, |_, _| false)?;
        let b = to_point(&fwd.last().1);
        let hq1 = (self.q1(&b) - self.q1(&a)) / (2.0 * h);
        let ca = chi(norm(a.x) / (2.0 * self.m)).0;
        let cb = chi(norm(b.x) / (2.0 * self.m)).0;
        if ca == 0.0 && cb == 0.0 {
            return Ok((hq1, 0.0));
        }
        let (j_short, j_rest, end) = if self.escaped(&to_state(&a)) { (0.0, 0.0, to_state(&b)) } else { self.quadrature(&a, 2.0 * h)? };
        let cb = chi(norm([end[0], end[1]]) / (2.0 * self.m)).0;
        // q₂(a) = −ca·(j_short + j_rest), q₂(b) = −cb·j_rest.
        let hq2 = (ca * (j_short + j_rest) - cb * j_rest) / (2.0 * h);
        Ok((hq1, hq2))
    }

    pub fn hp_q(&self, pt: &PhasePoint) -> Result<f64, EscapeError> {
        let (a, b) = self.hp_parts(pt)?;
        Ok(self.l * a + b)
    }
}

/// Draws `n` points of `C_{λ₀}` from a 6-dimensional low-discrepancy
/// sequence: `|x|`, angle, `|ξ|` log-uniform, `p/|ξ|²` uniform in
/// `(−λ₀, λ₀)`, one of the four unit covectors on that level.
pub fn sample_cone(field: &InverseMetricField, lambda0: f64, x_range: (f64, f64), xi_range: (f64, f64), n: usize, seed: u64) -> Vec<PhasePoint> {
    let seq = LowDiscrepancy::new(6, seed);
    crate::par::map_range(n, |i| {
        let u = seq.point(i);
        let r = log_uniform(u[0], x_range.0, x_range.1);
        let th = uniform(u[1], 0.0, std::f64::consts::TAU);
        let x = [r * th.cos(), r * th.sin()];
        let k = log_uniform(u[2], xi_range.0, xi_range.1);
        let e = lambda0 * (1.0 - 1e-9) * uniform(u[3], -1.0, 1.0);
        let roots = unit_covectors_at_energy(field, x, e);
        let w = roots[((u[4] * roots.len() as f64) as usize).min(roots.len() - 1)];
        PhasePoint::new(x, [k * w[0], k * w[1]])
    })
}

fn weight(pt: &PhasePoint, delta: f64) -> f64 {
    jap(pt.x).powf(1.0 + delta) / jap(pt.xi)
}

/// Chooses `M ≥ max(1, R₀)` by doubling until `H_p(β∫₁^{2|x|}s^{−1−δ}ds) > 0`
/// on a cone sample with `|x| ≥ M`, then `L` by doubling until `H_pq > 0` on
/// a calibration sample, and doubles `L` once more as a safety factor.
pub fn build_escape_function(
    field: &InverseMetricField,
    cert: &NonTrappingCertificate,
    delta: f64,
    calibration: usize,
    opts: EscapeOptions,
) -> Result<EscapeFunction, EscapeError> {
    let mut esc = EscapeFunction::new(field, cert, delta, cert.convexity_radius.max(1.0), 1.0, opts)?;
    let m_max = esc.m * 2f64.powi(esc.opts.max_doublings as i32);
    loop {
        let pts = sample_cone(field, esc.lambda0, (esc.m, 1e3 * esc.m), esc.opts.xi_range, calibration, esc.opts.calibration_seed);
        if pts.iter().all(|p| esc.hp_beta_log(p) > 0.0) {
            break;
        }
        esc.m *= 2.0;
        if esc.m > m_max {
            return Err(EscapeError::NoRadius { m_max });
        }
    }
    let pts = sample_cone(field, esc.lambda0, esc.opts.x_range, esc.opts.xi_range, calibration, esc.opts.calibration_seed ^ 0x5eed_ca1b);
    let parts = crate::par::map_slice(&pts, |p| esc.hp_parts(p));
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut l = 1.0;
    for _ in 0..esc.opts.max_doublings {
        if parts.iter().all(|(a, b)| l * a + b > 0.0) {
            esc.l = 2.0 * l;
            return Ok(esc);
        }
        l *= 2.0;
    }
    Err(EscapeError::NoL { l })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub m: f64,
    pub l: f64,
    pub delta: f64,
    pub lambda0: f64,
    /// Sampled min of `H_pq·⟨x⟩^{1+δ}/⟨ξ⟩`.
    pub c1: f64,
    pub worst_point: Option<PhasePoint>,
    pub samples: usize,
    pub violations: usize,
    pub violating_points: Vec<PhasePoint>,
    pub pass: bool,
}

/// Samples `H_pq·⟨x⟩^{1+δ}/⟨ξ⟩` over the cone; passes iff its minimum is
/// positive.
pub fn verify_escape_inequality(esc: &EscapeFunction, samples: usize, seed: u64) -> Result<EscapeReport, EscapeError> {
    let pts = sample_cone(&esc.field, esc.lambda0, esc.opts.x_range, esc.opts.xi_range, samples, seed);
    let vals = crate::par::map_slice(&pts, |p| esc.hp_q(p).map(|v| v * weight(p, esc.delta)));
    let mut c1 = f64::INFINITY;
    let mut worst = None;
    let mut bad = Vec::new();
    let mut violations = 0;
    for (p, v) in pts.iter().zip(vals) {
        let v = v?;
        if v < c1 {
            c1 = v;
            worst = Some(*p);
        }
        if !(v > 0.0) {
            violations += 1;
            if bad.len() < MAX_REPORTED {
                bad.push(*p);
            }
        }
    }
    Ok(EscapeReport {
        m: esc.m,
        l: esc.l,
        delta: esc.delta,
        lambda0: esc.lambda0,
        c1,
        worst_point: worst,
        samples,
        violations,
        violating_points: bad,
        pass: violations == 0 && c1 > 0.0,
    })
}

/// Builds the escape function for `cert` with default options and
/// evaluates it at `pt`.
pub fn escape_q(field: &InverseMetricField, cert: &NonTrappingCertificate, delta: f64, pt: &PhasePoint) -> Result<f64, EscapeError> {
    let esc = build_escape_function(field, cert, delta, calibration_count(0), EscapeOptions::default())?;
    esc.q(pt)
}
