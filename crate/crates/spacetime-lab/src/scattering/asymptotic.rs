//! Asymptotic data `u(t) ≈ e^{itA} g_{±,+} + e^{−itA} g_{±,−}` for `±t ≫ 1`.

use serde::{Deserialize, Serialize};

use super::evolve::{lattice_index, Evolution, SolutionRecord};
use super::free::Sign;
use super::line::{line_norm, CauchyDatum};
use super::wave::log_log_slope;
use super::ScatteringError;
use crate::Complex64;

/// Sample times `start·2^k`, `k = 0, …, doublings`, on both sides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub start: f64,
    pub doublings: usize,
}

impl FitWindow {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.doublings).map(|k| self.start * 2f64.powi(k as i32)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticData {
    pub window: FitWindow,
    /// Window means, indexed `[future/past][+/−]`: `g[0][0] = g_{+,+}`,
    /// `g[1][1] = g_{−,−}`.
    pub g: [[Vec<Complex64>; 2]; 2],
    /// `‖g_{a,b}‖` in discrete `L²`.
    pub norms: [[f64; 2]; 2],
    /// `‖(g(t_k)) − (g(t_{k−1}))‖ / ‖g(t_k)‖` per side.
    pub increments: [Vec<f64>; 2],
    /// Log-log slope of the increments per side, the fitted remainder rate.
    pub remainder_exponent: [Option<f64>; 2],
    /// `max_t ‖u(t) − e^{itA}g_{±,+} − e^{−itA}g_{±,−}‖ / ‖u(t)‖` over the
    /// window, with the window means.
    pub reconstruction_residual: f64,
}

impl AsymptoticData {
    /// `‖g_{side,sign}‖ / ‖(g_{side,+}, g_{side,−})‖`.
    pub fn relative(&self, side: Sign, sign: Sign) -> f64 {
        let s = usize::from(side == Sign::Minus);
        let k = usize::from(sign == Sign::Minus);
        let total = self.norms[s][0].hypot(self.norms[s][1]);
        if total == 0.0 {
            0.0
        } else {
            self.norms[s][k] / total
        }
    }

    /// The larger of the two fitted exponents.
    pub fn worst_exponent(&self) -> Option<f64> {
        match self.remainder_exponent {
            [Some(a), Some(b)] => Some(a.max(b)),
            [a, b] => a.or(b),
        }
    }
}

fn mean(vs: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = vs.len() as f64;
    (0..vs[0].len()).map(|j| vs.iter().map(|v| v[j]).sum::<Complex64>() / n).collect()
}

fn diff_norm(line: &super::line::LineGrid, a: &[Complex64], b: &[Complex64]) -> f64 {
    line_norm(line, &a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Splits the data of `u` at the window times with `c^{±,vac}` after undoing
/// the free phases. Times beyond the record continue `u` as a homogeneous
/// solution, so the source must vanish there.
pub fn extract_asymptotic_data(evo: &Evolution, record: &SolutionRecord, window: FitWindow) -> Result<AsymptoticData, ScatteringError> {
    if window.doublings < 2 || !(window.start > 0.0) {
        return Err(ScatteringError::WindowTooShort(format!("need start > 0 and at least 2 doublings, got {window:?}")));
    }
    let free = evo.free();
    let line = evo.line;
    let times = window.times();
    let mut g: [[Vec<Complex64>; 2]; 2] = Default::default();
    let mut increments: [Vec<f64>; 2] = Default::default();
    let mut remainder_exponent = [None, None];
    let mut reconstruction_residual: f64 = 0.0;
    for (s, side) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        let mut samples: Vec<(CauchyDatum, [Vec<Complex64>; 2])> = Vec::with_capacity(times.len());
        for &t in &times {
            let n = side.value() as i64 * lattice_index(t, evo.step)?;
            let d = record.datum_beyond(evo, n)?;
            let back = free.evolve(&d, -(n as f64) * evo.step);
            let amp = [free.polarized_amplitude(Sign::Plus, &back), free.polarized_amplitude(Sign::Minus, &back)];
            samples.push((d, amp));
        }
        for k in 1..samples.len() {
            let (a, b) = (&samples[k].1, &samples[k - 1].1);
            let num = diff_norm(&line, &a[0], &b[0]).hypot(diff_norm(&line, &a[1], &b[1]));
            let den = line_norm(&line, &a[0]).hypot(line_norm(&line, &a[1]));
            increments[s].push(if den == 0.0 { 0.0 } else { num / den });
        }
        remainder_exponent[s] = log_log_slope(&times[1..], &increments[s]);
        for b in 0..2 {
            g[s][b] = mean(&samples.iter().map(|x| x.1[b].clone()).collect::<Vec<_>>());
        }
        let modes = free.datum_of_modes(&g[s][0], &g[s][1]);
        for (k, &t) in times.iter().enumerate() {
            let d = &samples[k].0;
            let fit = free.evolve(&modes, side.value() * lattice_index(t, evo.step)? as f64 * evo.step);
            let un = line_norm(&line, &d.u);
            if un > 0.0 {
                reconstruction_residual = reconstruction_residual.max(diff_norm(&line, &d.u, &fit.u) / un);
            }
        }
    }
    let norms = [[line_norm(&line, &g[0][0]), line_norm(&line, &g[0][1])], [line_norm(&line, &g[1][0]), line_norm(&line, &g[1][1])]];
    Ok(AsymptoticData { window, g, norms, increments, remainder_exponent, reconstruction_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::{GridFunction, SpacetimeGrid};
    use crate::metric_symbols::InverseMetricField;
    use crate::scattering::boundary::{rho_f, rho_fbar};
    use crate::scattering::evolve::EvolutionKind;
    use crate::scattering::line::LineGrid;

    fn flat(line: LineGrid, horizon: f64) -> Evolution {
        Evolution::new(&InverseMetricField::flat(), line, 1.0, 0.2, EvolutionKind::Perturbed, horizon).unwrap()
    }

    fn profile(line: LineGrid) -> Vec<Complex64> {
        (0..line.n).map(|j| Complex64::new((-line.y(j).powi(2)).exp(), 0.2)).collect()
    }

    #[test]
    fn single_frequency_sign_is_recovered() {
        let line = LineGrid::new(8.0, 64).unwrap();
        let evo = flat(line, 4.0);
        let g = profile(line);
        let zero = vec![Complex64::new(0.0, 0.0); line.n];
        let record = evo.homogeneous(&evo.free().datum_of_modes(&zero, &g), -2, 2).unwrap();
        let a = extract_asymptotic_data(&evo, &record, FitWindow { start: 2.0, doublings: 3 }).unwrap();
        for s in 0..2 {
            assert!(a.norms[s][0] < 1e-12);
            assert!(line_norm(&line, &a.g[s][1].iter().zip(&g).map(|(x, y)| x - y).collect::<Vec<_>>()) < 1e-11);
            assert!(a.increments[s].iter().all(|&i| i < 1e-12));
        }
        assert!(a.reconstruction_residual < 1e-11);
        assert!((a.relative(Sign::Plus, Sign::Minus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_functionals_split_the_free_datum() {
        let line = LineGrid::new(8.0, 64).unwrap();
        let evo = flat(line, 8.0);
        let d = CauchyDatum::from_fn(line, |y| Complex64::new((-y * y).exp(), 0.0), |y| Complex64::new(0.0, y * (-y * y).exp()));
        let record = evo.homogeneous(&d, -40, 41).unwrap();
        let (p, m) = (rho_f(&evo, &record, 8.0).unwrap(), rho_fbar(&evo, &record, 8.0).unwrap());
        assert!(p.value.add(&m.value).sub(&d.scaled(2.0.into())).l2_norm() < 1e-11);
        assert!(p.change < 1e-11 && m.change < 1e-11);
    }

    #[test]
    fn retarded_solution_has_no_past_data() {
        let g = SpacetimeGrid::new(8.0, 8.0, 80, 64).unwrap();
        let evo = flat(LineGrid::of(&g), 40.0);
        let f = GridFunction::from_fn(g, |x| Complex64::new(if x[0].abs() < 2.0 { (-x[1] * x[1]).exp() } else { 0.0 }, 0.0));
        let record = evo.retarded(&f, -40, 41).unwrap();
        let a = extract_asymptotic_data(&evo, &record, FitWindow { start: 8.0, doublings: 2 }).unwrap();
        assert_eq!(a.norms[1], [0.0, 0.0]);
        assert!(a.norms[0][0] > 1e-3 && a.norms[0][1] > 1e-3);
    }

    #[test]
    fn short_window_is_rejected() {
        let line = LineGrid::new(8.0, 64).unwrap();
        let evo = flat(line, 4.0);
        let record = evo.homogeneous(&CauchyDatum::zeros(line), -2, 2).unwrap();
        let r = extract_asymptotic_data(&evo, &record, FitWindow { start: 2.0, doublings: 1 });
        assert!(matches!(r, Err(ScatteringError::WindowTooShort(_))));
    }
}
