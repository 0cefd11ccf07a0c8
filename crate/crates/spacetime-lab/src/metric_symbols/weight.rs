//! Weight functions `λ = ⟨ξ⟩^{k−½}⟨δξ⟩^{−|k|−N−1}⟨x⟩^{l+½}⟨δx⟩^{−κ}` and
//! the sign of `H_p λ²` on the incoming and outgoing regions.

use serde::{Deserialize, Serialize};

use super::field::InverseMetricField;
use super::region::RegionSpec;
use super::sampling::{log_uniform, point_with_beta, uniform, LowDiscrepancy};
use super::symbol::{dot, hp_apply, jap, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub k: f64,
    pub l: f64,
    pub kappa: f64,
    pub n: f64,
    pub delta: f64,
}

impl WeightSpec {
    pub fn new(k: f64, l: f64, kappa: f64, n: f64, delta: f64) -> Self {
        Self { k, l, kappa, n, delta }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

pub fn weight_lambda(spec: &WeightSpec, pt: &PhasePoint) -> f64 {
    let d = spec.delta;
    let dxi = [d * pt.xi[0], d * pt.xi[1]];
    let dx = [d * pt.x[0], d * pt.x[1]];
    jap(pt.xi).powf(spec.k - 0.5)
        * jap(dxi).powf(-spec.k.abs() - spec.n - 1.0)
        * jap(pt.x).powf(spec.l + 0.5)
        * jap(dx).powf(-spec.kappa)
}

/// `(∂_x log λ², ∂_ξ log λ²)`.
pub fn log_weight_gradient(spec: &WeightSpec, pt: &PhasePoint) -> ([f64; 2], [f64; 2]) {
    let d2 = spec.delta * spec.delta;
    let jx2 = 1.0 + dot(pt.x, pt.x);
    let jdx2 = 1.0 + d2 * dot(pt.x, pt.x);
    let jxi2 = 1.0 + dot(pt.xi, pt.xi);
    let jdxi2 = 1.0 + d2 * dot(pt.xi, pt.xi);
    let cx = (2.0 * spec.l + 1.0) / jx2 - 2.0 * spec.kappa * d2 / jdx2;
    let cxi = (2.0 * spec.k - 1.0) / jxi2 - 2.0 * (spec.k.abs() + spec.n + 1.0) * d2 / jdxi2;
    ([cx * pt.x[0], cx * pt.x[1]], [cxi * pt.xi[0], cxi * pt.xi[1]])
}

/// `H_p(λ²)`.
pub fn hp_weight(field: &InverseMetricField, spec: &WeightSpec, pt: &PhasePoint) -> f64 {
    let l = weight_lambda(spec, pt);
    let (gx, gxi) = log_weight_gradient(spec, pt);
    l * l * hp_apply(field, pt, gx, gxi)
}

/// Which of the three weight inequalities to test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightCase {
    /// `H_pλ² ≤ C₁ (⟨ξ⟩/⟨x⟩) λ²` for `|ξ| ≥ r`, all `x`.
    Upper { r: f64 },
    /// `H_pλ² ≤ −C₂ (⟨ξ⟩/⟨x⟩) λ²` on the incoming region.
    Incoming { eps: f64, r: f64, big_r: f64 },
    /// `H_pλ² ≤ −C₃ (⟨ξ⟩/⟨x⟩) λ²` on the outgoing region.
    Outgoing { eps: f64, r: f64, big_r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub label: String,
    /// Constant fixed on the calibration sample (with safety factor 2).
    pub constant: f64,
    /// Extreme of the ratio seen on the main sample.
    pub sampled_extreme: f64,
    pub samples: usize,
    pub violations: usize,
    pub violating_points: Vec<PhasePoint>,
    pub pass: bool,
}

/// Number of calibration points used to fix a constant before the main
/// sweep counts violations against it.
pub fn calibration_count(samples: usize) -> usize {
    (samples / 10).max(1000)
}

pub(crate) const MAX_REPORTED: usize = 16;

/// Samples the region for `case` with `δ` drawn uniformly from `[0, 1]`, so
/// the constant is tested uniformly in `δ`.
pub fn verify_weight_inequality(
    field: &InverseMetricField,
    spec: &WeightSpec,
    case: WeightCase,
    samples: usize,
    seed: u64,
) -> InequalityReport {
    let (r, big_r, lo, hi, region) = match case {
        WeightCase::Upper { r } => (r, 1e-2, -1.0, 1.0, None),
        WeightCase::Incoming { eps, r, big_r } => (r, big_r, -1.0, -1.0 + eps, Some(RegionSpec::incoming(eps, r, big_r))),
        WeightCase::Outgoing { eps, r, big_r } => (r, big_r, 1.0 - eps, 1.0, Some(RegionSpec::outgoing(eps, r, big_r))),
    };
    let draw = |seq: &LowDiscrepancy, n: usize| -> Vec<(PhasePoint, f64)> {
        crate::par::map_range(n, |i| {
            let u = seq.point(i);
            let pt = point_with_beta(
                field,
                log_uniform(u[0], big_r, 1e3 * big_r.max(1.0)),
                uniform(u[1], 0.0, std::f64::consts::TAU),
                uniform(u[2], lo, hi),
                u[4] < 0.5,
                log_uniform(u[3], r, 1e3 * r),
            );
            let s = spec.with_delta(u[5]);
            let ratio = hp_weight(field, &s, &pt) / weight_lambda(&s, &pt).powi(2) * jap(pt.x) / jap(pt.xi);
            (pt, ratio)
        })
        .into_iter()
        .filter(|(pt, _)| region.map_or(true, |reg| reg.contains(field, pt)))
        .collect()
    };
    let cal = draw(&LowDiscrepancy::new(6, seed ^ 0x5eed_ca1b), calibration_count(samples));
    let main = draw(&LowDiscrepancy::new(6, seed), samples);
    let upper = matches!(case, WeightCase::Upper { .. });
    let (constant, sampled_extreme, bad): (f64, f64, Vec<PhasePoint>) = if upper {
        let c = (2.0 * cal.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)).max(1e-12);
        let ext = main.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        (c, ext, main.iter().filter(|p| !(p.1 <= c)).map(|p| p.0).collect())
    } else {
        let c = 0.5 * cal.iter().map(|p| -p.1).fold(f64::INFINITY, f64::min);
        let ext = main.iter().map(|p| -p.1).fold(f64::INFINITY, f64::min);
        (c, ext, main.iter().filter(|p| !(-p.1 >= c)).map(|p| p.0).collect())
    };
    let kind = match case {
        WeightCase::Upper { .. } => "upper",
        WeightCase::Incoming { .. } => "incoming",
        WeightCase::Outgoing { .. } => "outgoing",
    };
    InequalityReport {
        label: format!("weight-{kind}"),
        constant,
        sampled_extreme,
        samples: main.len(),
        violations: bad.len(),
        pass: constant > 0.0 && constant.is_finite() && bad.is_empty() && !main.is_empty(),
        violating_points: bad.into_iter().take(MAX_REPORTED).collect(),
    }
}
