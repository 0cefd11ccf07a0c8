//! Bicharacteristics `(z(t), ζ(t))` of `p`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::integrator::{integrate, DopriOptions, Solution, StepFailure};
use crate::metric_symbols::symbol::{dot, eval_symbol, hamilton_field};
use crate::metric_symbols::{InverseMetricField, PhasePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("integrator failed: {0}")]
    StepFailure(#[from] StepFailure),
    #[error("invalid flow request: {0}")]
    Invalid(String),
}

pub(crate) fn to_state(pt: &PhasePoint) -> [f64; 4] {
    [pt.x[0], pt.x[1], pt.xi[0], pt.xi[1]]
}

pub(crate) fn to_point(s: &[f64]) -> PhasePoint {
    PhasePoint::new([s[0], s[1]], [s[2], s[3]])
}

pub(crate) fn rhs(field: &InverseMetricField, s: &[f64; 4]) -> [f64; 4] {
    let (v, w) = hamilton_field(field, &to_point(s));
    [v[0], v[1], w[0], w[1]]
}

/// Integrator options for a seed: the step is also rejected when `p` moves
/// by more than `tol·(1+|ξ|²)` in one step.
pub fn flow_options(seed: &PhasePoint, tol: f64) -> DopriOptions {
    let scale = 1.0 + dot(seed.xi, seed.xi);
    DopriOptions { invariant_tol: tol * scale, ..DopriOptions::with_tol(tol) }
}

/// Runs the flow from `seed` at time 0 to `t_end`, stopping early when
/// `stop(t, point)` holds after an accepted step.
pub fn flow_until(
    field: &InverseMetricField,
    seed: &PhasePoint,
    t_end: f64,
    tol: f64,
    mut stop: impl FnMut(f64, &PhasePoint) -> bool,
) -> Result<Solution<4>, FlowError> {
    let opts = flow_options(seed, tol);
    Ok(integrate(
        |s| rhs(field, s),
        to_state(seed),
        0.0,
        t_end,
        &opts,
        |s| eval_symbol(field, &to_point(s)),
        |t, s| stop(t, &to_point(s)),
    )?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    pub seed: PhasePoint,
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub tol: f64,
    pub error_estimate: f64,
    pub max_drift: f64,
    #[serde(skip)]
    backward: Option<Solution<4>>,
    #[serde(skip)]
    forward: Option<Solution<4>>,
}

impl PhaseTrajectory {
    /// Dense-output state at `t` inside the integrated span.
    pub fn at(&self, t: f64) -> PhasePoint {
        let sol = if t < 0.0 { self.backward.as_ref() } else { self.forward.as_ref() };
        match sol {
            Some(s) => to_point(&s.at(t)),
            None => self.seed,
        }
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}

/// Integrates over `t_span = (t_min, t_max)` with `t_min ≤ 0 ≤ t_max`; the
/// seed is the state at `t = 0`.
pub fn integrate_flow(field: &InverseMetricField, seed: PhasePoint, t_span: (f64, f64), tol: f64) -> Result<PhaseTrajectory, FlowError> {
    if !(tol > 0.0) {
        return Err(FlowError::Invalid("tol must be positive".into()));
    }
    if !(t_span.0 <= 0.0 && t_span.1 >= 0.0) {
        return Err(FlowError::Invalid("t_span must contain 0".into()));
    }
    let back = if t_span.0 < 0.0 { Some(flow_until(field, &seed, t_span.0, tol, |_, _| false)?) } else { None };
    let fwd = if t_span.1 > 0.0 { Some(flow_until(field, &seed, t_span.1, tol, |_, _| false)?) } else { None };
    let mut times = Vec::new();
    let mut states = Vec::new();
    if let Some(b) = &back {
        for (t, s) in b.times.iter().zip(&b.states).rev() {
            times.push(*t);
            states.push(to_point(s));
        }
    } else {
        times.push(0.0);
        states.push(seed);
    }
    if let Some(f) = &fwd {
        for (t, s) in f.times.iter().zip(&f.states).skip(1) {
            times.push(*t);
            states.push(to_point(s));
        }
    }
    let p0 = eval_symbol(field, &seed);
    let max_drift = states.iter().map(|s| (eval_symbol(field, s) - p0).abs()).fold(0.0, f64::max);
    let error_estimate = back.iter().chain(fwd.iter()).map(|s| s.max_error_estimate).fold(0.0, f64::max) * tol;
    Ok(PhaseTrajectory { seed, times, states, tol, error_estimate, max_drift, backward: back, forward: fwd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::{make_perturbed_minkowski, MetricSpec};

    #[test]
    fn flat_straight_line() {
        let f = InverseMetricField::flat();
        let tr = integrate_flow(&f, PhasePoint::new([0.0, 0.0], [1.0, 1.0]), (-5.0, 5.0), 1e-10).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s.x[0] + 2.0 * t).abs() < 1e-12 && (s.x[1] - 2.0 * t).abs() < 1e-12);
            assert_eq!(s.xi, [1.0, 1.0]);
        }
        assert_eq!(tr.at(0.0).x, [0.0, 0.0]);
    }

    #[test]
    fn bump_self_convergence() {
        let f = make_perturbed_minkowski(MetricSpec { product_form: false, ..MetricSpec::bump(0.1, 2.0, 1.5) }).unwrap();
        let seed = PhasePoint::new([-3.0, 1.0], [1.0, 0.9]);
        let tol = 1e-8;
        let a = integrate_flow(&f, seed, (0.0, 30.0), tol).unwrap();
        let b = integrate_flow(&f, seed, (0.0, 30.0), tol / 100.0).unwrap();
        for t in [1.0, 7.5, 15.0, 30.0] {
            let (p, q) = (a.at(t), b.at(t));
            // Same mixed absolute/relative scale as the step controller.
            let d = [(p.x[0], q.x[0]), (p.x[1], q.x[1]), (p.xi[0], q.xi[0]), (p.xi[1], q.xi[1])]
                .iter()
                .map(|(u, v)| (u - v).abs() / (1.0 + u.abs().max(v.abs())))
                .fold(0.0, f64::max);
            assert!(d < 10.0 * tol, "t = {t}: {d}");
        }
    }
}
