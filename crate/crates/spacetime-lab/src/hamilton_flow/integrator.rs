//! Dormand–Prince 5(4) with FSAL, dense output and an optional invariant
//! monitor used as an extra step-rejection criterion.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepFailure {
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    Underflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    Blowup { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
    /// Largest change of the monitored invariant allowed in one step.
    pub invariant_tol: f64,
}

impl DopriOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h0: 1e-2, max_steps: 2_000_000, invariant_tol: f64::INFINITY }
    }
}

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

#[derive(Clone, Debug)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub segments: Vec<Segment<N>>,
    pub max_error_estimate: f64,
    pub rejected: usize,
    /// True when the run ended because `stop` returned true.
    pub stopped: bool,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }

    /// Dense-output state at `t` (clamped to the integrated range).
    pub fn at(&self, t: f64) -> [f64; N] {
        if self.segments.is_empty() {
            return self.states[0];
        }
        let fwd = self.segments[0].h > 0.0;
        let idx = self.segments.partition_point(|s| if fwd { s.t1() < t } else { s.t1() > t });
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        let tc = if fwd { t.clamp(seg.t0, seg.t1()) } else { t.clamp(seg.t1(), seg.t0) };
        seg.eval(tc)
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

/// Integrates `y' = f(y)` from `t0` to `t1` (either direction). `invariant`
/// is checked after every trial step; a step whose invariant change exceeds
/// `opts.invariant_tol` is rejected like a step with too large an error.
/// `stop(t, y)` ends the run early after an accepted step.
pub fn integrate<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t0: f64,
    t1: f64,
    opts: &DopriOptions,
    invariant: impl Fn(&[f64; N]) -> f64,
    mut stop: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<Solution<N>, StepFailure> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0],
        segments: Vec::new(),
        max_error_estimate: 0.0,
        rejected: 0,
        stopped: false,
    };
    if span == 0.0 {
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = opts.h0.min(span) * dir;
    let mut inv = invariant(&y);
    let mut steps = 0usize;
    loop {
        if (t1 - t) * dir <= 0.0 {
            break;
        }
        if steps >= opts.max_steps {
            return Err(StepFailure::TooManySteps(opts.max_steps));
        }
        steps += 1;
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(StepFailure::Underflow { t, h: h.abs() });
        }
        let k2 = f(&comb(&y, h, &[(A21, &k1)]));
        let k3 = f(&comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = comb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y1);
        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            if h.abs() < 1e-12 {
                return Err(StepFailure::Blowup { t });
            }
            h *= 0.25;
            sol.rejected += 1;
            continue;
        }
        let inv1 = invariant(&y1);
        let drift_ok = (inv1 - inv).abs() <= opts.invariant_tol;
        if err <= 1.0 && drift_ok {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.segments.push(Segment { t0: t, h, rcont });
            t = if last { t1 } else { t + h };
            y = y1;
            k1 = k7;
            inv = inv1;
            sol.max_error_estimate = sol.max_error_estimate.max(err);
            sol.times.push(t);
            sol.states.push(y);
            if stop(t, &y) {
                sol.stopped = true;
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            sol.rejected += 1;
            let fac = if err > 1.0 { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.5 };
            h *= fac;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let sol = integrate(f, [1.0, 0.0], 0.0, 10.0, &DopriOptions::with_tol(1e-11), |_| 0.0, |_, _| false).unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        for k in 0..50 {
            let s = 0.2 * k as f64 + 0.013;
            let d = sol.at(s);
            assert!((d[0] - s.cos()).abs() < 1e-8, "dense output at {s}");
        }
    }

    #[test]
    fn backward_and_stop() {
        let f = |y: &[f64; 1]| [y[0]];
        let sol = integrate(f, [1.0], 0.0, -3.0, &DopriOptions::with_tol(1e-12), |_| 0.0, |_, _| false).unwrap();
        assert!((sol.last().1[0] - (-3f64).exp()).abs() < 1e-11);
        let sol = integrate(f, [1.0], 0.0, 10.0, &DopriOptions::with_tol(1e-10), |_| 0.0, |_, y| y[0] > 5.0).unwrap();
        assert!(sol.stopped && sol.last().1[0] > 5.0 && sol.last().0 < 10.0);
        assert!((sol.at(1.0)[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn invariant_tolerance_forces_smaller_steps() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let e = |y: &[f64; 2]| y[0] * y[0] + y[1] * y[1];
        let loose = integrate(f, [1.0, 0.0], 0.0, 20.0, &DopriOptions::with_tol(1e-6), e, |_, _| false).unwrap();
        let opts = DopriOptions { invariant_tol: 1e-12, ..DopriOptions::with_tol(1e-6) };
        let tight = integrate(f, [1.0, 0.0], 0.0, 20.0, &opts, e, |_, _| false).unwrap();
        assert!(tight.times.len() > loose.times.len());
        let drift = tight.states.iter().map(|y| (e(y) - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12 * tight.times.len() as f64);
    }
}
