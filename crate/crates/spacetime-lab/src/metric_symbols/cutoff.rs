//! Polynomial-smoothstep cutoffs and the cutoff families `a, b₁, b₂, e`
//! used by propagation estimates in the mid, incoming and outgoing regions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::checks::{verify_accposi, AccposiReport};
use super::field::InverseMetricField;
use super::region::RegionSpec;
use super::sampling::{log_uniform, point_with_beta, uniform, LowDiscrepancy};
use super::symbol::{beta, hp_beta, hp_norm_x, hp_norm_xi, jap, norm, PhasePoint};
use super::weight::{calibration_count, MAX_REPORTED};

/// `6u⁵ − 15u⁴ + 10u³` clamped to `[0, 1]`, with derivative.
pub fn smoothstep(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0)
    } else {
        let u2 = u * u;
        (u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - u) * (1.0 - u))
    }
}

/// 0 below `a`, 1 above `b`, C² in between.
pub fn ramp(t: f64, a: f64, b: f64) -> (f64, f64) {
    let (v, d) = smoothstep((t - a) / (b - a));
    (v, d / (b - a))
}

/// `χ = 1` on `t ≤ 1`, `0` on `t ≥ 2`, `χ' ≤ 0`.
pub fn chi(t: f64) -> (f64, f64) {
    let (v, d) = smoothstep(t - 1.0);
    (1.0 - v, -d)
}

/// `χ̄_R(s) = 1 − χ(s/R)` and its `s`-derivative.
pub fn chibar(s: f64, big_r: f64) -> (f64, f64) {
    let (v, d) = chi(s / big_r);
    (1.0 - v, -d / big_r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffCase {
    Mid { beta1: f64, beta2: f64 },
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub case: CutoffCase,
    pub eps: f64,
    pub r: f64,
    pub big_r: f64,
    /// Required decay rate of `e^{−Mβ}` along the flow (mid case only).
    pub l: f64,
}

impl CutoffParams {
    pub fn mid(beta1: f64, beta2: f64, eps: f64, r: f64, big_r: f64) -> Self {
        Self { case: CutoffCase::Mid { beta1, beta2 }, eps, r, big_r, l: 1.0 }
    }

    pub fn incoming(eps: f64, r: f64, big_r: f64) -> Self {
        Self { case: CutoffCase::In, eps, r, big_r, l: 1.0 }
    }

    pub fn outgoing(eps: f64, r: f64, big_r: f64) -> Self {
        Self { case: CutoffCase::Out, eps, r, big_r, l: 1.0 }
    }

    /// `β`-band on which the accposi positivity is needed.
    fn positivity_margin(&self) -> f64 {
        match self.case {
            CutoffCase::Mid { beta1, beta2 } => 1.0 - (beta1 - 2.0 * self.eps).abs().max((beta2 + 2.0 * self.eps).abs()),
            CutoffCase::In | CutoffCase::Out => self.eps,
        }
    }

    /// `β`-interval sampled when calibrating and verifying.
    fn beta_window(&self) -> (f64, f64) {
        let e = self.eps;
        match self.case {
            CutoffCase::Mid { beta1, beta2 } => ((beta1 - 3.0 * e).max(-1.0), (beta2 + 3.0 * e).min(1.0)),
            CutoffCase::In => (-1.0, (-1.0 + 3.0 * e).min(1.0)),
            CutoffCase::Out => ((1.0 - 3.0 * e).max(-1.0), 1.0),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutoffError {
    #[error("invalid cutoff parameters: {0}")]
    Invalid(String),
    #[error("accposi positivity fails at ε₀ = {eps0}, R = {big_r} (C₄ = {c4:.4e})")]
    AccposiFailed { eps0: f64, big_r: f64, c4: f64 },
    #[error("no M up to {0} makes e^(-Mβ) decay at the required rate")]
    NoDecayRate(f64),
}

/// Values of the four symbols at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffValues {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub e: f64,
}

/// Closed-form cutoff symbols. With `F(β)` the β-profile (times `e^{−Mβ}`
/// in the mid case), `X = χ̄_R(|x|)`, `Y = χ̄_r(|ξ|)`:
///
/// * `a  = F X Y`
/// * `b₁ = √C_{b1} E √(ε ρ ρ'₊) X Y`
/// * `b₂ = √C_{b2} E ρ √(R X X') Y`
/// * `e  = √C_e   E ρ X √(r Y Y')`
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    field: InverseMetricField,
    pub params: CutoffParams,
    pub m: f64,
    pub c_b1: f64,
    pub c_b2: f64,
    pub c_e: f64,
    pub accposi: AccposiReport,
}

struct Parts {
    rho: (f64, f64),
    exp: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl CutoffFamily {
    fn rho(&self, b: f64) -> (f64, f64) {
        let e = self.params.eps;
        match self.params.case {
            CutoffCase::Mid { beta1, beta2 } => {
                let (u, du) = ramp(b, beta1 - 2.0 * e, beta1 - e);
                let (w, dw) = ramp(b, beta2 + e, beta2 + 2.0 * e);
                (u * (1.0 - w), du * (1.0 - w) - u * dw)
            }
            CutoffCase::In => {
                let (v, d) = ramp(b, -1.0 + e, -1.0 + 2.0 * e);
                (1.0 - v, -d)
            }
            CutoffCase::Out => ramp(b, 1.0 - 2.0 * e, 1.0 - e),
        }
    }

    fn parts(&self, pt: &PhasePoint) -> Option<Parts> {
        let b = beta(&self.field, pt).ok()?;
        let exp = match self.params.case {
            CutoffCase::Mid { .. } => (-self.m * b).exp(),
            _ => 1.0,
        };
        Some(Parts {
            rho: self.rho(b),
            exp,
            x: chibar(norm(pt.x), self.params.big_r),
            y: chibar(norm(pt.xi), self.params.r),
        })
    }

    pub fn field(&self) -> &InverseMetricField {
        &self.field
    }

    pub fn eval(&self, pt: &PhasePoint) -> CutoffValues {
        let Some(p) = self.parts(pt) else { return CutoffValues::default() };
        let (rho, drho) = p.rho;
        let a = p.exp * rho * p.x.0 * p.y.0;
        let b1 = self.c_b1.sqrt() * p.exp * (self.params.eps * rho * drho.max(0.0)).sqrt() * p.x.0 * p.y.0;
        let b2 = self.c_b2.sqrt() * p.exp * rho * (self.params.big_r * p.x.0 * p.x.1).max(0.0).sqrt() * p.y.0;
        let e = self.c_e.sqrt() * p.exp * rho * p.x.0 * (self.params.r * p.y.0 * p.y.1).max(0.0).sqrt();
        CutoffValues { a, b1, b2, e }
    }

    /// `H_p(a²)` by the chain rule through `β`, `|x|`, `|ξ|`.
    pub fn hp_a2(&self, pt: &PhasePoint) -> f64 {
        let Some(p) = self.parts(pt) else { return 0.0 };
        let (rho, drho) = p.rho;
        let hb = hp_beta(&self.field, pt).unwrap_or(0.0);
        let dfdb = match self.params.case {
            CutoffCase::Mid { .. } => p.exp * (drho - self.m * rho),
            _ => drho,
        };
        let f = p.exp * rho;
        let a = f * p.x.0 * p.y.0;
        let hp_a = dfdb * hb * p.x.0 * p.y.0
            + f * p.x.1 * hp_norm_x(&self.field, pt) * p.y.0
            + f * p.x.0 * p.y.1 * hp_norm_xi(&self.field, pt);
        2.0 * a * hp_a
    }

    /// Right-hand side `(⟨ξ⟩/⟨x⟩)(−L a² + b₁² + b₂² + e²)`, the `−L a²` term
    /// present only in the mid case.
    pub fn rhs(&self, pt: &PhasePoint) -> f64 {
        let v = self.eval(pt);
        let la = match self.params.case {
            CutoffCase::Mid { .. } => self.params.l * v.a * v.a,
            _ => 0.0,
        };
        jap(pt.xi) / jap(pt.x) * (-la + v.b1 * v.b1 + v.b2 * v.b2 + v.e * v.e)
    }

    /// Ratios whose suprema fix `C_{b1}, C_{b2}, C_e`.
    fn constant_ratios(&self, pt: &PhasePoint) -> [f64; 3] {
        let Some(p) = self.parts(pt) else { return [0.0; 3] };
        let w = jap(pt.x) / jap(pt.xi);
        let (rho, drho) = p.rho;
        let mut out = [0.0; 3];
        if drho > 0.0 && rho > 0.0 && p.x.0 > 0.0 && p.y.0 > 0.0 {
            out[0] = 2.0 * hp_beta(&self.field, pt).unwrap_or(0.0) * w / self.params.eps;
        }
        if p.x.1 > 0.0 && rho > 0.0 && p.y.0 > 0.0 {
            out[1] = 2.0 * hp_norm_x(&self.field, pt) * w / self.params.big_r;
        }
        if p.y.1 > 0.0 && rho > 0.0 && p.x.0 > 0.0 {
            out[2] = 2.0 * hp_norm_xi(&self.field, pt) * w / self.params.r;
        }
        out.map(|v| v.max(0.0))
    }

    /// Region where `a` may be nonzero, where `b₁` may be nonzero, and
    /// where `a` must be elliptic.
    pub fn regions(&self) -> (RegionSpec, Option<RegionSpec>, RegionSpec) {
        let CutoffParams { eps, r, big_r, .. } = self.params;
        match self.params.case {
            CutoffCase::Mid { beta1, beta2 } => (
                RegionSpec::mid(beta1 - 2.0 * eps, beta2 + 2.0 * eps, r, big_r),
                Some(RegionSpec::mid(beta1 - 2.0 * eps, beta1 - eps, r, big_r)),
                RegionSpec::mid(beta1 - eps, beta2 + eps, 2.0 * r, 2.0 * big_r),
            ),
            CutoffCase::In => (RegionSpec::incoming(2.0 * eps, r, big_r), None, RegionSpec::incoming(eps, 2.0 * r, 2.0 * big_r)),
            CutoffCase::Out => (
                RegionSpec::outgoing(2.0 * eps, r, big_r),
                Some(RegionSpec::mid(1.0 - 2.0 * eps, 1.0 - eps, r, big_r)),
                RegionSpec::outgoing(eps, 2.0 * r, 2.0 * big_r),
            ),
        }
    }
}

fn sample_points(field: &InverseMetricField, params: &CutoffParams, n: usize, seed: u64) -> Vec<PhasePoint> {
    let (lo, hi) = params.beta_window();
    let seq = LowDiscrepancy::new(5, seed);
    crate::par::map_range(n, |i| {
        let u = seq.point(i);
        point_with_beta(
            field,
            log_uniform(u[0], 0.5 * params.big_r, 16.0 * params.big_r),
            uniform(u[1], 0.0, std::f64::consts::TAU),
            uniform(u[2], lo, hi),
            u[4] < 0.5,
            log_uniform(u[3], 0.25 * params.r, 8.0 * params.r),
        )
    })
}

/// Builds the family: certifies accposi on the relevant β-band, doubles `M`
/// until `M H_pβ ≥ L ⟨ξ⟩/⟨x⟩` on the calibration sample of the mid region,
/// and fixes the constants of `b₁, b₂, e` as twice the calibration suprema.
pub fn build_cutoff_family(
    field: &InverseMetricField,
    params: CutoffParams,
    samples: usize,
    seed: u64,
) -> Result<CutoffFamily, CutoffError> {
    let bad = |m: &str| Err(CutoffError::Invalid(m.into()));
    if !(params.eps > 0.0 && params.r > 0.0 && params.big_r >= 1.0 && params.l > 0.0) {
        return bad("need ε > 0, r > 0, R ≥ 1, L > 0");
    }
    match params.case {
        CutoffCase::Mid { beta1, beta2 } => {
            if !(-1.0 < beta1 && beta1 < beta2 && beta2 < 1.0) {
                return bad("need −1 < β₁ < β₂ < 1");
            }
            if params.positivity_margin() <= 0.0 {
                return bad("ε too large for the β-interval");
            }
        }
        CutoffCase::In if params.eps >= 0.5 => return bad("need ε < 1/2"),
        CutoffCase::Out if params.eps >= 0.25 => return bad("need ε < 1/4"),
        _ => {}
    }
    let eps0 = params.positivity_margin();
    let accposi = verify_accposi(field, eps0, params.big_r, calibration_count(samples), seed);
    if !accposi.pass {
        return Err(CutoffError::AccposiFailed { eps0, big_r: params.big_r, c4: accposi.c4 });
    }
    let cal = sample_points(field, &params, calibration_count(samples), seed ^ 0xca1);
    let mut fam = CutoffFamily { field: field.clone(), params, m: 0.0, c_b1: 0.0, c_b2: 0.0, c_e: 0.0, accposi };
    if let CutoffCase::Mid { .. } = params.case {
        let (outer, _, _) = fam.regions();
        let rates: Vec<f64> = cal
            .iter()
            .filter(|p| outer.contains(field, p))
            .map(|p| hp_beta(field, p).unwrap_or(f64::NEG_INFINITY) * jap(p.x) / jap(p.xi))
            .collect();
        let worst = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let mut m = 1.0;
        while m * worst < params.l {
            m *= 2.0;
            if m > 1e6 || !(worst > 0.0) {
                return Err(CutoffError::NoDecayRate(m));
            }
        }
        fam.m = m;
    }
    let sups = cal.iter().map(|p| fam.constant_ratios(p)).fold([0.0f64; 3], |acc, r| {
        [acc[0].max(r[0]), acc[1].max(r[1]), acc[2].max(r[2])]
    });
    fam.c_b1 = 2.0 * sups[0];
    fam.c_b2 = 2.0 * sups[1];
    fam.c_e = 2.0 * sups[2];
    Ok(fam)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub case: CutoffCase,
    pub m: f64,
    pub c_b1: f64,
    pub c_b2: f64,
    pub c_e: f64,
    pub samples: usize,
    pub inequality_violations: usize,
    pub support_violations: usize,
    pub ellipticity_violations: usize,
    pub max_abs_value: f64,
    pub violating_points: Vec<PhasePoint>,
    pub pass: bool,
}

/// Checks `H_p a² ≤ rhs`, the support containments and ellipticity of `a`
/// on a fresh low-discrepancy sample.
pub fn verify_cutoff_family(fam: &CutoffFamily, samples: usize, seed: u64) -> CutoffReport {
    let field = &fam.field;
    let pts = sample_points(field, &fam.params, samples, seed);
    let (outer, strip, inner) = fam.regions();
    let any = RegionSpec::mid(-1.0, 1.0, fam.params.r, fam.params.big_r);
    let r = fam.params.r;
    let inner_floor = match fam.params.case {
        CutoffCase::Mid { .. } => (-fam.m).exp(),
        _ => 1.0,
    };
    let rows = crate::par::map_slice(&pts, |p| {
        let v = fam.eval(p);
        let lhs = fam.hp_a2(p);
        let rhs = fam.rhs(p);
        let ineq = lhs > rhs + 1e-12 * (lhs.abs() + rhs.abs());
        let nxi = norm(p.xi);
        let support = (v.a != 0.0 && !outer.contains(field, p))
            || (v.b1 != 0.0 && !strip.is_some_and(|s| s.contains(field, p)))
            || (v.b2 != 0.0 && !any.contains(field, p))
            || (v.e != 0.0 && !(nxi >= 0.5 * r && nxi <= 2.5 * r));
        let ellip = inner.contains(field, p) && v.a < inner_floor * (1.0 - 1e-12);
        let mag = v.a.abs().max(v.b1.abs()).max(v.b2.abs()).max(v.e.abs());
        (ineq, support, ellip, mag)
    });
    let count = |k: usize| rows.iter().filter(|r| [r.0, r.1, r.2][k]).count();
    let violating_points: Vec<PhasePoint> = pts
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.0 || r.1 || r.2)
        .map(|(p, _)| *p)
        .take(MAX_REPORTED)
        .collect();
    let (iv, sv, ev) = (count(0), count(1), count(2));
    CutoffReport {
        case: fam.params.case,
        m: fam.m,
        c_b1: fam.c_b1,
        c_b2: fam.c_b2,
        c_e: fam.c_e,
        samples: pts.len(),
        inequality_violations: iv,
        support_violations: sv,
        ellipticity_violations: ev,
        max_abs_value: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        violating_points,
        pass: iv == 0 && sv == 0 && ev == 0,
    }
}
