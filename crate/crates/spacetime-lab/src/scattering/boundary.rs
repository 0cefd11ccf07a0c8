//! Finite-time surrogates of the boundary functionals
//! `ρ_F u = c⁺ 𝒰_free(0, T) ρ_T u + c⁻ 𝒰_free(0, −T) ρ_{−T} u` and
//! `ρ_F̄ u`, with the two signs of `T` swapped.

use serde::{Deserialize, Serialize};

use super::evolve::{lattice_index, Evolution, SolutionRecord};
use super::free::Sign;
use super::line::CauchyDatum;
use super::ScatteringError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub t: f64,
    pub value: CauchyDatum,
    /// `‖ρ^{(T)} − ρ^{(T/2)}‖_{ℰ⁰}`.
    pub change: f64,
    /// `‖ρ_0 u‖_{ℰ⁰}`, the natural scale for `change`.
    pub scale: f64,
}

/// `c^a 𝒰_free(0, T) ρ_T + c^{−a} 𝒰_free(0, −T) ρ_{−T}` from the data at
/// `±T`; `a = +` gives `ρ_F`.
pub(crate) fn combine(evo: &Evolution, sign: Sign, n: i64, future: &CauchyDatum, past: &CauchyDatum) -> CauchyDatum {
    let free = evo.free();
    let t = n as f64 * evo.step;
    let (fp, pp) = (free.evolve(future, -t), free.evolve(past, t));
    let other = match sign {
        Sign::Plus => Sign::Minus,
        Sign::Minus => Sign::Plus,
    };
    free.vacuum_projector(sign, &fp).add(&free.vacuum_projector(other, &pp))
}

fn functional(evo: &Evolution, record: &SolutionRecord, t: f64, sign: Sign) -> Result<BoundaryValue, ScatteringError> {
    let n = lattice_index(t, evo.step)?;
    if n < 2 {
        return Err(ScatteringError::Precondition("need T ≥ 2 steps".into()));
    }
    let at = |n: i64| -> Result<CauchyDatum, ScatteringError> { Ok(combine(evo, sign, n, &record.datum_beyond(evo, n)?, &record.datum_beyond(evo, -n)?)) };
    let value = at(n)?;
    let half = at(n / 2)?;
    let fft = evo.free().fft();
    Ok(BoundaryValue { t, change: value.sub(&half).energy_space_norm(fft, 0.0), scale: record.datum_beyond(evo, 0)?.energy_space_norm(fft, 0.0), value })
}

pub fn rho_f(evo: &Evolution, record: &SolutionRecord, t: f64) -> Result<BoundaryValue, ScatteringError> {
    functional(evo, record, t, Sign::Plus)
}

pub fn rho_fbar(evo: &Evolution, record: &SolutionRecord, t: f64) -> Result<BoundaryValue, ScatteringError> {
    functional(evo, record, t, Sign::Minus)
}

/// `ρ_F^{(T)}` of the homogeneous solution with datum `h` at `t = 0`.
pub(crate) fn rho_f_homogeneous(evo: &Evolution, h: &CauchyDatum, n: i64) -> Result<CauchyDatum, ScatteringError> {
    let future = evo.evolve_index(h, 0, n)?;
    let past = evo.evolve_index(h, 0, -n)?;
    Ok(combine(evo, Sign::Plus, n, &future, &past))
}
