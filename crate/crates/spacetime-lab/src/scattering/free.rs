//! The free Klein–Gordon propagator `e^{itH_free}` and the vacuum boundary
//! projectors, both diagonal in the discrete Fourier basis of the line.

use serde::{Deserialize, Serialize};

use super::line::{CauchyDatum, LineFft, LineGrid};
use super::ScatteringError;
use crate::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `H_free = [[0, 1], [A², 0]]` with `A² = −Δ_h + m₀²` (periodic
/// three-point Laplacian). With a time step `k` the frequency `A` is
/// replaced by the leapfrog frequency `ω = (2/k) arcsin(kA/2)`, for which
/// the propagator is exact on the time lattice.
#[derive(Clone, Debug)]
pub struct FreePropagator {
    pub line: LineGrid,
    pub m0: f64,
    pub step: Option<f64>,
    freq: Vec<f64>,
    fft: LineFft,
}

impl FreePropagator {
    pub fn continuous(line: LineGrid, m0: f64) -> Result<Self, ScatteringError> {
        Self::build(line, m0, None)
    }

    pub fn lattice(line: LineGrid, m0: f64, step: f64) -> Result<Self, ScatteringError> {
        Self::build(line, m0, Some(step))
    }

    fn build(line: LineGrid, m0: f64, step: Option<f64>) -> Result<Self, ScatteringError> {
        if !(m0 > 0.0) {
            return Err(ScatteringError::Precondition("need m₀ > 0".into()));
        }
        let mut freq = Vec::with_capacity(line.n);
        for k in 0..line.n {
            let a = (line.eta_hat_sq(k) + m0 * m0).sqrt();
            freq.push(match step {
                None => a,
                Some(dt) => {
                    let x = 0.5 * dt * a;
                    if !(dt > 0.0) || x >= 1.0 {
                        return Err(ScatteringError::CflViolation { time: 0.0, number: x });
                    }
                    2.0 * x.asin() / dt
                }
            });
        }
        Ok(Self { line, m0, step, freq, fft: LineFft::new(line.n) })
    }

    pub fn fft(&self) -> &LineFft {
        &self.fft
    }

    /// `A` (or `ω`) on Fourier mode `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.freq[k]
    }

    /// Applies a 2×2 Fourier multiplier `[[a, b], [c, d]](k)` to a datum.
    pub fn apply_multiplier(&self, d: &CauchyDatum, m: impl Fn(usize, f64) -> [[Complex64; 2]; 2]) -> CauchyDatum {
        let (uh, vh) = (self.fft.forward(&d.u), self.fft.forward(&d.v));
        let mut ou = vec![Complex64::new(0.0, 0.0); self.line.n];
        let mut ov = ou.clone();
        for k in 0..self.line.n {
            let a = m(k, self.freq[k]);
            ou[k] = a[0][0] * uh[k] + a[0][1] * vh[k];
            ov[k] = a[1][0] * uh[k] + a[1][1] * vh[k];
        }
        CauchyDatum { line: self.line, u: self.fft.inverse(&ou), v: self.fft.inverse(&ov), order: d.order }
    }

    /// `e^{i dt H_free}` = `[[cos, iA⁻¹ sin], [iA sin, cos]](dt A)`.
    pub fn evolve(&self, d: &CauchyDatum, dt: f64) -> CauchyDatum {
        if dt == 0.0 {
            return d.clone();
        }
        let i = Complex64::new(0.0, 1.0);
        self.apply_multiplier(d, |_, a| {
            let (s, c) = (dt * a).sin_cos();
            [[c.into(), i * (s / a)], [i * (a * s), c.into()]]
        })
    }

    /// `c^{±,vac} = ½[[1, ±A⁻¹], [±A, 1]]`.
    pub fn vacuum_projector(&self, sign: Sign, d: &CauchyDatum) -> CauchyDatum {
        let s = sign.value();
        self.apply_multiplier(d, |_, a| [[0.5.into(), (0.5 * s / a).into()], [(0.5 * s * a).into(), 0.5.into()]])
    }

    /// `g` with `u = e^{±itA}g` for `c^±`-polarised data: the `u` component of
    /// `c^± d`.
    pub fn polarized_amplitude(&self, sign: Sign, d: &CauchyDatum) -> Vec<Complex64> {
        self.vacuum_projector(sign, d).u
    }

    /// The datum of `e^{itA}g₊ + e^{−itA}g₋` at `t = 0`: `(g₊ + g₋, A(g₊ − g₋))`.
    pub fn datum_of_modes(&self, g_plus: &[Complex64], g_minus: &[Complex64]) -> CauchyDatum {
        let (gp, gm) = (self.fft.forward(g_plus), self.fft.forward(g_minus));
        let u: Vec<Complex64> = gp.iter().zip(&gm).map(|(a, b)| a + b).collect();
        let v: Vec<Complex64> = (0..self.line.n).map(|k| (gp[k] - gm[k]) * self.freq[k]).collect();
        CauchyDatum { line: self.line, u: self.fft.inverse(&u), v: self.fft.inverse(&v), order: 0.0 }
    }

    /// `‖A u‖² + ‖v‖²`.
    pub fn energy(&self, d: &CauchyDatum) -> f64 {
        let (uh, vh) = (self.fft.forward(&d.u), self.fft.forward(&d.v));
        let n = self.line.n as f64;
        let e: f64 = (0..self.line.n).map(|k| self.freq[k].powi(2) * uh[k].norm_sqr() + vh[k].norm_sqr()).sum();
        self.line.h() * e / n
    }
}

/// `π⁺ = diag(1, 0)`, `π⁻ = diag(0, 1)`.
pub fn pi_projector(sign: Sign, d: &CauchyDatum) -> CauchyDatum {
    let z = vec![Complex64::new(0.0, 0.0); d.line.n];
    match sign {
        Sign::Plus => CauchyDatum { line: d.line, u: d.u.clone(), v: z, order: d.order },
        Sign::Minus => CauchyDatum { line: d.line, u: z, v: d.v.clone(), order: d.order },
    }
}

/// `𝒰_free(t, s) d` with the time-continuous propagator.
pub fn free_evolve(d: &CauchyDatum, s: f64, t: f64, m0: f64) -> Result<CauchyDatum, ScatteringError> {
    Ok(FreePropagator::continuous(d.line, m0)?.evolve(d, t - s))
}

/// The vacuum projectors `c^{±,vac}` and `π^±` for a given mass.
pub fn boundary_projectors(m0: f64, line: LineGrid) -> Result<FreePropagator, ScatteringError> {
    FreePropagator::continuous(line, m0)
}
