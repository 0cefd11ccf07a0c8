//! Inverse wave operators `W_±^{−1} = lim 𝒰_free(0, t) 𝒰(t, 0)` by time
//! doubling.

use serde::{Deserialize, Serialize};

use super::evolve::{lattice_index, Evolution};
use super::free::Sign;
use super::line::CauchyDatum;
use super::ScatteringError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CookReport {
    pub sign: Sign,
    /// Checkpoints `|t| = t₀·2^k`.
    pub times: Vec<f64>,
    /// `‖W(t_k) − W(t_{k−1})‖_{ℰ⁰} / ‖d‖_{ℰ⁰}` with `W(0) = d`.
    pub increments: Vec<f64>,
    /// Least-squares slope of `log increment` against `log t` over the
    /// nonzero increments after the first.
    pub slope: Option<f64>,
    pub limit: CauchyDatum,
    pub converged: bool,
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn doubling(evo: &Evolution, sign: Sign, d: &CauchyDatum, stop: f64, t_start: f64, t_max: f64) -> Result<CookReport, ScatteringError> {
    if !(t_start > 0.0 && t_max >= t_start) {
        return Err(ScatteringError::Precondition("need 0 < t_start ≤ t_max".into()));
    }
    let fft = evo.free().fft();
    let scale = d.energy_space_norm(fft, 0.0);
    if scale == 0.0 {
        return Ok(CookReport { sign, times: vec![], increments: vec![], slope: None, limit: d.clone(), converged: true });
    }
    let (mut times, mut increments) = (Vec::new(), Vec::new());
    let (mut n_prev, mut cur, mut w_prev) = (0i64, d.clone(), d.clone());
    let mut converged = false;
    let mut t = t_start;
    while t <= t_max * (1.0 + 1e-12) {
        let n = sign.value() as i64 * lattice_index(t, evo.step)?;
        cur = evo.evolve_index(&cur, n_prev, n)?;
        n_prev = n;
        let w = evo.free().evolve(&cur, -(n as f64) * evo.step);
        let inc = w.sub(&w_prev).energy_space_norm(fft, 0.0) / scale;
        times.push(t);
        increments.push(inc);
        w_prev = w;
        if inc < stop {
            converged = true;
            break;
        }
        t *= 2.0;
    }
    let k = 1.min(times.len());
    let slope = log_log_slope(&times[k..], &increments[k..]);
    Ok(CookReport { sign, times, increments, slope, limit: w_prev, converged })
}

/// Doubles `|t|` from `t_start` until the increment drops below `tol`;
/// `NotConverged` once `|t|` would exceed `t_max`. The evolution's horizon
/// must cover `t_max`.
pub fn wave_operator_inverse(evo: &Evolution, sign: Sign, d: &CauchyDatum, tol: f64, t_start: f64, t_max: f64) -> Result<CookReport, ScatteringError> {
    let r = doubling(evo, sign, d, tol, t_start, t_max)?;
    if r.converged {
        Ok(r)
    } else {
        Err(ScatteringError::NotConverged { t_max, increments: r.increments })
    }
}

/// The full increment history up to `t_max`, for rate fits.
pub fn cook_increments(evo: &Evolution, sign: Sign, d: &CauchyDatum, t_start: f64, t_max: f64) -> Result<CookReport, ScatteringError> {
    doubling(evo, sign, d, 0.0, t_start, t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::{make_perturbed_minkowski, InverseMetricField, MetricSpec};
    use crate::scattering::evolve::EvolutionKind;
    use crate::scattering::line::LineGrid;
    use crate::Complex64;

    fn setup(field: &InverseMetricField, horizon: f64) -> (Evolution, CauchyDatum) {
        let line = LineGrid::new(16.0, 128).unwrap();
        let evo = Evolution::new(field, line, 1.0, 0.2, EvolutionKind::Perturbed, horizon).unwrap();
        let d = CauchyDatum::from_fn(line, |y| Complex64::new((-y * y / 2.0).exp(), 0.0), |_| Complex64::new(0.0, 0.0));
        (evo, d)
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powf(-1.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn flat_wave_operator_is_the_identity() {
        let (evo, d) = setup(&InverseMetricField::flat(), 8.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let r = wave_operator_inverse(&evo, sign, &d, 1e-10, 2.0, 8.0).unwrap();
            assert_eq!(r.times.len(), 1);
            assert!(r.limit.sub(&d).l2_norm() < 1e-11);
        }
    }

    #[test]
    fn cook_increments_decay_at_the_integrable_rate() {
        let mu = 1.5;
        let field = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, mu)).unwrap();
        let (evo, d) = setup(&field, 128.0);
        let r = cook_increments(&evo, Sign::Plus, &d, 4.0, 128.0).unwrap();
        assert!(r.increments.windows(2).skip(1).all(|w| w[1] < w[0]), "{:?}", r.increments);
        let slope = r.slope.unwrap();
        assert!(slope <= 1.0 - mu + 0.2 && slope < 0.0, "{slope} {:?}", r.increments);
    }

    #[test]
    fn slow_decay_does_not_converge() {
        let field = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 0.5)).unwrap();
        let (evo, d) = setup(&field, 64.0);
        let r = wave_operator_inverse(&evo, Sign::Minus, &d, 1e-3, 4.0, 64.0);
        match r {
            Err(ScatteringError::NotConverged { increments, .. }) => assert_eq!(increments.len(), 5),
            other => panic!("{other:?}"),
        }
    }
}
