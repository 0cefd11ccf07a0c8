//! Time marching for `P + m₀²` on a periodic line.
//!
//! The perturbed path marches the rows of the density-conjugated operator
//! `P₁ = |g|^{1/4} P |g|^{−1/4}` with the same stencil that [`assemble_p`]
//! uses, so a marched solution satisfies the spacetime difference equation
//! row by row. The conformal path marches the reduced equation
//! `∂_t²u + r∂_t u − Δ_h̃ u + c²(V + m₀²)u = 0` for `P` itself and rescales
//! by `|g|^{1/4}` on the way in and out.
//!
//! [`assemble_p`]: crate::grid_calculus::assemble_p

use serde::{Deserialize, Serialize};

use super::conformal::ReducedCoefficients;
use super::free::FreePropagator;
use super::line::{CauchyDatum, LineGrid};
use super::ScatteringError;
use crate::grid_calculus::{GridFunction, SpacetimeGrid};
use crate::metric_symbols::InverseMetricField;
use crate::Complex64;

/// A step is accepted while `k²·B/(2(α₊ + α₋)) < 1`, with `B` the Gershgorin
/// bound of the spatial part and `α±` the time couplings of a row. For the
/// flat field this is exactly `k·max A < 2`.
pub const CFL_LIMIT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionKind {
    Perturbed,
    ConformalReduced,
}

/// One marching row: `up·u_{n+1} + down·u_{n−1} + diag·u_n + right·u_{j+1}
/// + left·u_{j−1} = f_n`, together with the slice rescaling `w`.
#[derive(Clone, Debug, Default)]
struct Row {
    up: Vec<f64>,
    down: Vec<f64>,
    diag: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
    w: Vec<f64>,
    cfl: f64,
}

/// `|g|^{1/2} g^{jk}` as `[tt, yy]`.
fn density(field: &InverseMetricField, t: f64, y: f64) -> [f64; 2] {
    let g = field.inverse_metric([t, y]);
    let s = field.sqrt_abs_g([t, y]);
    [s * g[0][0], s * g[1][1]]
}

fn quarter(field: &InverseMetricField, t: f64, y: f64) -> f64 {
    field.sqrt_abs_g([t, y]).sqrt()
}

fn density_row(field: &InverseMetricField, line: &LineGrid, m0: f64, k: f64, t: f64) -> Row {
    let (n, h) = (line.n, line.h());
    let ys: Vec<f64> = (0..n).map(|j| line.y(j)).collect();
    let w: Vec<f64> = ys.iter().map(|&y| quarter(field, t, y)).collect();
    let wp: Vec<f64> = ys.iter().map(|&y| quarter(field, t + k, y)).collect();
    let wm: Vec<f64> = ys.iter().map(|&y| quarter(field, t - k, y)).collect();
    // β on the link j → j+1 (the last link wraps to j = 0).
    let beta: Vec<f64> = ys.iter().map(|&y| density(field, t, y + 0.5 * h)[1] / (h * h)).collect();
    let mut r = Row { w: w.clone(), ..Row::default() };
    for j in 0..n {
        let (jr, jl) = ((j + 1) % n, (j + n - 1) % n);
        let ap = -density(field, t + 0.5 * k, ys[j])[0] / (k * k);
        let am = -density(field, t - 0.5 * k, ys[j])[0] / (k * k);
        let (bp, bm) = (beta[j], beta[jl]);
        let ww = w[j] * w[j];
        let spatial = (bp + bm) / ww + field.potential([t, ys[j]]) + m0 * m0;
        r.up.push(ap / (w[j] * wp[j]));
        r.down.push(am / (w[j] * wm[j]));
        r.diag.push(spatial - (ap + am) / ww);
        r.right.push(-bp / (w[j] * w[jr]));
        r.left.push(-bm / (w[j] * w[jl]));
        let bound = spatial.abs() + (bp / (w[j] * w[jr])).abs() + (bm / (w[j] * w[jl])).abs();
        r.cfl = r.cfl.max(bound / (2.0 * (ap + am) / ww));
    }
    r
}

fn reduced_row(red: &ReducedCoefficients, line: &LineGrid, m0: f64, k: f64, t: f64) -> Row {
    let (n, h) = (line.n, line.h());
    let ys: Vec<f64> = (0..n).map(|j| line.y(j)).collect();
    let mut r = Row { w: ys.iter().map(|&y| red.quarter_density(t, y)).collect(), ..Row::default() };
    let sigma: Vec<f64> = ys.iter().map(|&y| red.spatial_metric(t, y + 0.5 * h).powf(-0.5)).collect();
    for j in 0..n {
        let jl = (j + n - 1) % n;
        let y = ys[j];
        let s = red.spatial_metric(t, y).sqrt();
        let rt = red.damping(t, y);
        let q = red.potential(t, y) + m0 * m0 * red.lapse_sq(t, y);
        let (sp, sm) = (sigma[j] / (s * h * h), sigma[jl] / (s * h * h));
        let (ap, am) = (1.0 / (k * k) + 0.5 * rt / k, 1.0 / (k * k) - 0.5 * rt / k);
        r.up.push(ap);
        r.down.push(am);
        r.diag.push(sp + sm + q - 2.0 / (k * k));
        r.right.push(-sp);
        r.left.push(-sm);
        let bound = (sp + sm + q).abs() + sp + sm;
        r.cfl = r.cfl.max(bound / (2.0 * (ap + am)));
    }
    r
}

/// Marching rows for `|n| ≤ horizon`, built once and shared by every
/// evolution on the same field.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub field: InverseMetricField,
    pub line: LineGrid,
    pub m0: f64,
    pub step: f64,
    pub kind: EvolutionKind,
    /// Largest `|n|` whose row is available.
    pub horizon: i64,
    rows: Vec<Row>,
    free: FreePropagator,
}

/// `t/k` when it is an integer up to round-off.
pub fn lattice_index(t: f64, k: f64) -> Result<i64, ScatteringError> {
    let n = (t / k).round();
    if (n * k - t).abs() > 1e-9 * k.max(t.abs()) {
        return Err(ScatteringError::Precondition(format!("time {t} is not a multiple of the step {k}")));
    }
    Ok(n as i64)
}

impl Evolution {
    /// Rows for times `n·step` with `|n·step| ≤ horizon + 2·step`.
    pub fn new(field: &InverseMetricField, line: LineGrid, m0: f64, step: f64, kind: EvolutionKind, horizon: f64) -> Result<Self, ScatteringError> {
        if !field.is_product_form() {
            return Err(ScatteringError::NotProductForm);
        }
        if !(m0 > 0.0) || !(step > 0.0) || !(horizon >= 0.0) {
            return Err(ScatteringError::Precondition("need m₀ > 0, step > 0, horizon ≥ 0".into()));
        }
        let free = FreePropagator::lattice(line, m0, step)?;
        let nh = (horizon / step).ceil() as i64 + 2;
        let red = ReducedCoefficients::new(field);
        let build = |n: i64| {
            let t = n as f64 * step;
            match kind {
                EvolutionKind::Perturbed => density_row(field, &line, m0, step, t),
                EvolutionKind::ConformalReduced => reduced_row(&red, &line, m0, step, t),
            }
        };
        let rows = if field.is_flat() && field.spec().potential_amplitude == 0.0 {
            vec![build(0)]
        } else {
            crate::par::map_range((2 * nh + 1) as usize, |i| build(i as i64 - nh))
        };
        for (i, r) in rows.iter().enumerate() {
            if !(r.cfl < CFL_LIMIT) {
                let n = if rows.len() == 1 { 0 } else { i as i64 - nh };
                return Err(ScatteringError::CflViolation { time: n as f64 * step, number: r.cfl });
            }
        }
        Ok(Self { field: field.clone(), line, m0, step, kind, horizon: nh, rows, free })
    }

    /// The lattice free propagator matching this step.
    pub fn free(&self) -> &FreePropagator {
        &self.free
    }

    /// Largest CFL number over the table.
    pub fn cfl(&self) -> f64 {
        self.rows.iter().map(|r| r.cfl).fold(0.0, f64::max)
    }

    fn row(&self, n: i64) -> Result<&Row, ScatteringError> {
        if self.rows.len() == 1 {
            return Ok(&self.rows[0]);
        }
        if n.abs() > self.horizon {
            return Err(ScatteringError::Precondition(format!("time index {n} beyond the horizon {}", self.horizon)));
        }
        Ok(&self.rows[(n + self.horizon) as usize])
    }

    /// Slice `n + 1` (forward) or `n − 1` from slices `n` and `n ∓ 1` and the
    /// source row `f_n`, all in the marched variable.
    pub fn march(&self, n: i64, cur: &[Complex64], other: &[Complex64], f: Option<&[Complex64]>, forward: bool) -> Result<Vec<Complex64>, ScatteringError> {
        let r = self.row(n)?;
        let m = self.line.n;
        let (solve_for, known) = if forward { (&r.up, &r.down) } else { (&r.down, &r.up) };
        Ok((0..m)
            .map(|j| {
                let (jr, jl) = ((j + 1) % m, (j + m - 1) % m);
                let src = f.map_or(Complex64::new(0.0, 0.0), |f| f[j]);
                let rest = known[j] * other[j] + r.diag[j] * cur[j] + r.right[j] * cur[jr] + r.left[j] * cur[jl];
                (src - rest) / solve_for[j]
            })
            .collect())
    }

    /// Slice rescaling from the marched variable to the `P₁` variable.
    fn weight(&self, n: i64) -> Result<&[f64], ScatteringError> {
        Ok(&self.row(n)?.w)
    }

    fn to_marched(&self, n: i64, v: &[Complex64]) -> Result<Vec<Complex64>, ScatteringError> {
        Ok(match self.kind {
            EvolutionKind::Perturbed => v.to_vec(),
            EvolutionKind::ConformalReduced => v.iter().zip(self.weight(n)?).map(|(z, w)| z / w).collect(),
        })
    }

    fn from_marched(&self, n: i64, v: &[Complex64]) -> Result<Vec<Complex64>, ScatteringError> {
        Ok(match self.kind {
            EvolutionKind::Perturbed => v.to_vec(),
            EvolutionKind::ConformalReduced => v.iter().zip(self.weight(n)?).map(|(z, w)| z * w).collect(),
        })
    }

    /// `(u_n, u_{n+1})` of the free lattice solution through the datum: the
    /// datum is read at slice `n`, and `v` is defined through one exact free
    /// step. The map is a bijection, so marching composes exactly.
    pub fn datum_to_state(&self, d: &CauchyDatum) -> (Vec<Complex64>, Vec<Complex64>) {
        (d.u.clone(), self.free.evolve(d, self.step).u)
    }

    pub fn state_to_datum(&self, u0: &[Complex64], u1: &[Complex64]) -> CauchyDatum {
        let fft = self.free.fft();
        let (a, b) = (fft.forward(u0), fft.forward(u1));
        let i = Complex64::new(0.0, 1.0);
        let v: Vec<Complex64> = (0..self.line.n)
            .map(|k| {
                let w = self.free.frequency(k);
                let (s, c) = (self.step * w).sin_cos();
                w * (b[k] - a[k] * c) / (i * s)
            })
            .collect();
        CauchyDatum { line: self.line, u: u0.to_vec(), v: fft.inverse(&v), order: 0.0 }
    }

    /// `U(t, s) d` for homogeneous data.
    pub fn evolve(&self, d: &CauchyDatum, s: f64, t: f64) -> Result<CauchyDatum, ScatteringError> {
        let (ns, nt) = (lattice_index(s, self.step)?, lattice_index(t, self.step)?);
        self.evolve_index(d, ns, nt)
    }

    pub fn evolve_index(&self, d: &CauchyDatum, ns: i64, nt: i64) -> Result<CauchyDatum, ScatteringError> {
        if d.line != self.line {
            return Err(ScatteringError::Precondition("datum lives on a different line grid".into()));
        }
        let (u0, u1) = self.datum_to_state(d);
        let (mut a, mut b) = (self.to_marched(ns, &u0)?, self.to_marched(ns + 1, &u1)?);
        // (a, b) = (u_n, u_{n+1}).
        let mut n = ns;
        while n < nt {
            let c = self.march(n + 1, &b, &a, None, true)?;
            a = std::mem::replace(&mut b, c);
            n += 1;
        }
        while n > nt {
            let c = self.march(n, &a, &b, None, false)?;
            b = std::mem::replace(&mut a, c);
            n -= 1;
        }
        let (p0, p1) = (self.from_marched(nt, &a)?, self.from_marched(nt + 1, &b)?);
        Ok(self.state_to_datum(&p0, &p1).with_order(d.order))
    }

    /// Homogeneous solution through `d` at `t = 0`, recorded on `[lo, hi]`.
    pub fn homogeneous(&self, d: &CauchyDatum, lo: i64, hi: i64) -> Result<SolutionRecord, ScatteringError> {
        if !(lo <= 0 && hi >= 1) {
            return Err(ScatteringError::Precondition("record must contain slices 0 and 1".into()));
        }
        let (u0, u1) = self.datum_to_state(d);
        let (m0, m1) = (self.to_marched(0, &u0)?, self.to_marched(1, &u1)?);
        let mut fwd = vec![m0.clone(), m1.clone()];
        for n in 1..hi {
            let next = self.march(n, &fwd[n as usize], &fwd[n as usize - 1], None, true)?;
            fwd.push(next);
        }
        let mut back: Vec<Vec<Complex64>> = Vec::new();
        let (mut cur, mut ahead) = (m0, m1);
        for n in (lo + 1..=0).rev() {
            let prev = self.march(n, &cur, &ahead, None, false)?;
            back.push(prev.clone());
            ahead = std::mem::replace(&mut cur, prev);
        }
        back.reverse();
        let marched: Vec<Vec<Complex64>> = back.into_iter().chain(fwd).collect();
        self.record(lo, marched)
    }

    fn record(&self, lo: i64, marched: Vec<Vec<Complex64>>) -> Result<SolutionRecord, ScatteringError> {
        let slices = marched.iter().enumerate().map(|(i, s)| self.from_marched(lo + i as i64, s)).collect::<Result<Vec<_>, _>>()?;
        Ok(SolutionRecord { line: self.line, step: self.step, first: lo, slices })
    }

    /// Retarded solution of `(P₁ + m₀²)u = f` for `f` on a spacetime grid
    /// whose `t` axis is this lattice: zero up to and including the first
    /// nonzero source row, then marched forward to `hi`.
    pub fn retarded(&self, f: &GridFunction, lo: i64, hi: i64) -> Result<SolutionRecord, ScatteringError> {
        if self.kind != EvolutionKind::Perturbed {
            return Err(ScatteringError::Precondition("sources are only supported on the perturbed path".into()));
        }
        let rows = source_rows(f, self)?;
        let m = self.line.n;
        let zero = vec![Complex64::new(0.0, 0.0); m];
        let Some(first) = rows.first_nonzero() else {
            return Ok(SolutionRecord { line: self.line, step: self.step, first: lo, slices: vec![zero; (hi - lo + 1) as usize] });
        };
        if first <= lo || rows.last_nonzero().unwrap_or(first) >= hi {
            return Err(ScatteringError::Precondition("source support must lie strictly inside the record".into()));
        }
        let mut slices = vec![zero.clone(); (first - lo + 1) as usize];
        for n in first..hi {
            let i = (n - lo) as usize;
            let next = self.march(n, &slices[i], &slices[i - 1], rows.row(n), true)?;
            slices.push(next);
        }
        Ok(SolutionRecord { line: self.line, step: self.step, first: lo, slices })
    }
}

/// Rows of a spacetime source indexed by lattice time.
struct SourceRows<'a> {
    f: &'a GridFunction,
    offset: i64,
    nonzero: Vec<bool>,
}

fn source_rows<'a>(f: &'a GridFunction, evo: &Evolution) -> Result<SourceRows<'a>, ScatteringError> {
    let g = &f.grid;
    check_grid(g, evo.line, evo.step)?;
    let nonzero = (0..g.nt).map(|i| f.values[i * g.ny..(i + 1) * g.ny].iter().any(|z| *z != Complex64::new(0.0, 0.0))).collect();
    Ok(SourceRows { f, offset: -(g.nt as i64) / 2, nonzero })
}

impl SourceRows<'_> {
    fn first_nonzero(&self) -> Option<i64> {
        self.nonzero.iter().position(|&b| b).map(|i| i as i64 + self.offset)
    }

    fn last_nonzero(&self) -> Option<i64> {
        self.nonzero.iter().rposition(|&b| b).map(|i| i as i64 + self.offset)
    }

    fn row(&self, n: i64) -> Option<&[Complex64]> {
        let i = n - self.offset;
        if i < 0 || i as usize >= self.nonzero.len() || !self.nonzero[i as usize] {
            return None;
        }
        let ny = self.f.grid.ny;
        Some(&self.f.values[i as usize * ny..(i as usize + 1) * ny])
    }
}

/// The `t` axis of `g` must be the lattice `n·step` and its `y` axis `line`.
pub fn check_grid(g: &SpacetimeGrid, line: LineGrid, step: f64) -> Result<(), ScatteringError> {
    if LineGrid::of(g) != line || (g.ht() - step).abs() > 1e-12 * step {
        return Err(ScatteringError::Precondition("spacetime grid does not match the evolution lattice".into()));
    }
    Ok(())
}

/// Slices `u(n·step)` for `n = first, first + 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub line: LineGrid,
    pub step: f64,
    pub first: i64,
    pub slices: Vec<Vec<Complex64>>,
}

impl SolutionRecord {
    pub fn last(&self) -> i64 {
        self.first + self.slices.len() as i64 - 1
    }

    pub fn slice(&self, n: i64) -> Option<&[Complex64]> {
        if n < self.first || n > self.last() {
            return None;
        }
        Some(&self.slices[(n - self.first) as usize])
    }

    /// Datum at `n` from slices `n` and `n + 1`.
    pub fn datum(&self, evo: &Evolution, n: i64) -> Result<CauchyDatum, ScatteringError> {
        match (self.slice(n), self.slice(n + 1)) {
            (Some(a), Some(b)) => Ok(evo.state_to_datum(a, b)),
            _ => Err(ScatteringError::Precondition(format!("record [{}, {}] lacks slices {n}, {}", self.first, self.last(), n + 1))),
        }
    }

    /// Datum at `n`, continuing the last (or first) two slices as a
    /// homogeneous solution when `n` lies outside the record.
    pub fn datum_beyond(&self, evo: &Evolution, n: i64) -> Result<CauchyDatum, ScatteringError> {
        if n >= self.first && n < self.last() {
            return self.datum(evo, n);
        }
        let base = if n >= self.last() { self.last() - 1 } else { self.first };
        evo.evolve_index(&self.datum(evo, base)?, base, n)
    }

    pub fn add(&self, o: &Self) -> Result<Self, ScatteringError> {
        if self.first != o.first || self.slices.len() != o.slices.len() || self.line != o.line {
            return Err(ScatteringError::Precondition("records cover different ranges".into()));
        }
        let slices = self.slices.iter().zip(&o.slices).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Ok(Self { slices, ..self.clone() })
    }

    /// Restriction to the lattice times of `grid`.
    pub fn on_grid(&self, grid: &SpacetimeGrid) -> Result<GridFunction, ScatteringError> {
        check_grid(grid, self.line, self.step)?;
        let off = -(grid.nt as i64) / 2;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nt {
            let s = self.slice(i as i64 + off).ok_or_else(|| ScatteringError::Precondition("record does not cover the grid".into()))?;
            values.extend_from_slice(s);
        }
        Ok(GridFunction { grid: *grid, values })
    }

    /// Writes `t, y, re, im` rows for the slices at the given times.
    pub fn write_slices_csv(&self, path: &std::path::Path, times: &[f64]) -> Result<(), ScatteringError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| ScatteringError::Io(e.to_string()))?;
        w.write_record(["t", "y", "re", "im"]).map_err(|e| ScatteringError::Io(e.to_string()))?;
        for &t in times {
            let n = lattice_index(t, self.step)?;
            let s = self.slice(n).ok_or_else(|| ScatteringError::Precondition(format!("no slice at t = {t}")))?;
            for (j, z) in s.iter().enumerate() {
                w.write_record(&[format!("{t:e}"), format!("{:e}", self.line.y(j)), format!("{:e}", z.re), format!("{:e}", z.im)])
                    .map_err(|e| ScatteringError::Io(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| ScatteringError::Io(e.to_string()))
    }
}

/// `U(t, s) d` on `field` with the perturbed path.
pub fn evolve(field: &InverseMetricField, d: &CauchyDatum, s: f64, t: f64, step: f64, m0: f64) -> Result<CauchyDatum, ScatteringError> {
    let evo = Evolution::new(field, d.line, m0, step, EvolutionKind::Perturbed, s.abs().max(t.abs()))?;
    evo.evolve(d, s, t)
}
