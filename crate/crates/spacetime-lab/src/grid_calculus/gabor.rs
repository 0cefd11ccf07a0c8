//! Gaussian Gabor frame for phase-space mass.
//!
//! Window `g(x) = exp(−|x|²/2σ²)` truncated to a box of `±6σ`, shifted over
//! a lattice with stride at most `σ/2` (stride 1 on an axis where the box
//! wraps the whole period). The lattice sum `Σ_{x₀}|g(x − x₀)|²` is then
//! constant to machine precision (Poisson summation), so the frame is tight
//! after one global normalisation.

use super::fourier::Fft2;
use super::grid::{fft_frequency, GridError, GridFunction};
use crate::metric_symbols::{InverseMetricField, PhasePoint, RegionSpec};

pub type Region<'a> = &'a (dyn Fn(&PhasePoint) -> bool + Sync);

fn stride(n: usize, max: usize) -> usize {
    (1..=max.max(1)).rev().find(|s| n % s == 0).unwrap_or(1)
}

fn box_len(n: usize, half: f64, h: f64) -> usize {
    let b = 2 * (half / h).ceil() as usize;
    b.clamp(2, n)
}

/// Squared-magnitude mass of the windowed transform of `u` inside each
/// region, normalised so that the whole phase space carries `‖u‖²`.
pub fn gabor_masses(u: &GridFunction, sigma: f64, regions: &[Region<'_>]) -> Result<Vec<f64>, GridError> {
    let g = u.grid;
    let (ht, hy) = (g.ht(), g.hy());
    if sigma < 2.0 * ht.max(hy) {
        return Err(GridError::Invalid(format!("window width {sigma} below twice the spacing")));
    }
    let (bt, by) = (box_len(g.nt, 6.0 * sigma, ht), box_len(g.ny, 6.0 * sigma, hy));
    // A box that wraps the whole axis truncates the window early; only the
    // full lattice keeps the frame tight then.
    let st = if bt == g.nt { 1 } else { stride(g.nt, (0.5 * sigma / ht) as usize) };
    let sy = if by == g.ny { 1 } else { stride(g.ny, (0.5 * sigma / hy) as usize) };
    let win: Vec<f64> = (0..bt * by)
        .map(|k| {
            let (a, b) = (k / by, k % by);
            let dt = (a as f64 - (bt / 2) as f64) * ht;
            let dy = (b as f64 - (by / 2) as f64) * hy;
            (-(dt * dt + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    // Lattice sum of |g|² at the origin; constant in x by the stride choice.
    let c: f64 = (0..bt * by)
        .filter(|k| (k / by + g.nt - bt / 2) % st == 0 && (k % by + g.ny - by / 2) % sy == 0)
        .map(|k| win[k] * win[k])
        .sum();
    let fft = Fft2::new(bt, by);
    let freqs: Vec<[f64; 2]> = (0..bt * by).map(|k| [fft_frequency(k / by, bt, ht), fft_frequency(k % by, by, hy)]).collect();
    let (pt_n, py_n) = (g.nt / st, g.ny / sy);
    let per_pos = crate::par::map_range(pt_n * py_n, |q| {
        let (pi, pj) = ((q / py_n) * st, (q % py_n) * sy);
        let x0 = g.point(g.index(pi, pj));
        let mut buf: Vec<crate::Complex64> = (0..bt * by)
            .map(|k| {
                let (a, b) = (k / by, k % by);
                let i = (pi + g.nt + a - bt / 2) % g.nt;
                let j = (pj + g.ny + b - by / 2) % g.ny;
                u.values[g.index(i, j)] * win[k]
            })
            .collect();
        fft.forward(&mut buf);
        let mut out = vec![0.0; regions.len()];
        for (k, z) in buf.iter().enumerate() {
            let m = z.norm_sqr();
            if m == 0.0 {
                continue;
            }
            let p = PhasePoint::new(x0, freqs[k]);
            for (o, r) in out.iter_mut().zip(regions) {
                if r(&p) {
                    *o += m;
                }
            }
        }
        out
    });
    let scale = g.cell_area() / ((bt * by) as f64 * c);
    let mut total = vec![0.0; regions.len()];
    for v in per_pos {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    }
    Ok(total.into_iter().map(|t| t * scale).collect())
}

pub fn gabor_mass_where(u: &GridFunction, sigma: f64, region: impl Fn(&PhasePoint) -> bool + Sync) -> Result<f64, GridError> {
    Ok(gabor_masses(u, sigma, &[&region])?[0])
}

/// Mass inside a phase-space region of `metric_symbols`.
pub fn gabor_mass(u: &GridFunction, field: &InverseMetricField, region: &RegionSpec, sigma: f64) -> Result<f64, GridError> {
    gabor_mass_where(u, sigma, |p| region.contains(field, p))
}
