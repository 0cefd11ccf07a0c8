//! Discrete Weyl quantization:
//! `K(x, x') = N⁻¹ Σ_ξ e^{i(x−x')·ξ} a((x+x')/2, ξ)` over the FFT
//! frequencies of the grid.

use faer::Mat;

use super::fourier::Fft2;
use super::grid::SpacetimeGrid;
use super::operator::{GridOperator, OperatorKind};
use crate::metric_symbols::PhasePoint;
use crate::Complex64;

/// For each midpoint `m` (half-grid in both axes) the kernel row
/// `d ↦ K` is one inverse FFT of `ξ ↦ a(m, ξ)`. Dense output.
pub fn quantize_weyl(grid: &SpacetimeGrid, symbol: impl Fn(&PhasePoint) -> f64 + Sync) -> GridOperator {
    let (nt, ny) = (grid.nt, grid.ny);
    let n = grid.len();
    let fft = Fft2::new(nt, ny);
    let freqs: Vec<[f64; 2]> = (0..n).map(|k| grid.frequency(k)).collect();
    let mut m = Mat::<Complex64>::zeros(n, n);
    let batch = 8usize;
    let na = 2 * nt - 1;
    for a0 in (0..na).step_by(batch) {
        let slabs = crate::par::map_range(batch.min(na - a0), |da| {
            let a = a0 + da;
            let mt = -grid.lt + 0.5 * a as f64 * grid.ht();
            let mut out = Vec::with_capacity(2 * ny - 1);
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for b in 0..2 * ny - 1 {
                let my = -grid.ly + 0.5 * b as f64 * grid.hy();
                for (k, f) in freqs.iter().enumerate() {
                    buf[k] = Complex64::new(symbol(&PhasePoint::new([mt, my], *f)), 0.0);
                }
                fft.inverse_normalized(&mut buf);
                out.push(buf.clone());
            }
            (a, out)
        });
        for (a, out) in slabs {
            let i_lo = a.saturating_sub(nt - 1);
            let i_hi = a.min(nt - 1);
            for i in i_lo..=i_hi {
                let ip = a - i;
                let dt = (i + nt - ip) % nt;
                for (b, row) in out.iter().enumerate() {
                    let j_lo = b.saturating_sub(ny - 1);
                    let j_hi = b.min(ny - 1);
                    for j in j_lo..=j_hi {
                        let jp = b - j;
                        let dy = (j + ny - jp) % ny;
                        m[(grid.index(i, j), grid.index(ip, jp))] = row[dt * ny + dy];
                    }
                }
            }
        }
    }
    let mut op = GridOperator::dense(*grid, OperatorKind::Weyl, true, m);
    op.periodization_error = op.hermitian_defect();
    op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_symbols::conjugate_symbol;

    #[test]
    fn constant_symbol_is_identity() {
        let g = SpacetimeGrid::square(2.0, 8).unwrap();
        let op = quantize_weyl(&g, |_| 1.0);
        let m = op.to_dense();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn position_symbol_is_diagonal() {
        let g = SpacetimeGrid::new(2.0, 3.0, 8, 10).unwrap();
        let m = quantize_weyl(&g, |p| (p.x[0] * 0.3).sin() + p.x[1] * p.x[1]).to_dense();
        for i in 0..g.len() {
            let x = g.point(i);
            for j in 0..g.len() {
                let want = if i == j { (x[0] * 0.3).sin() + x[1] * x[1] } else { 0.0 };
                assert!((m[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_symbol_matches_brute_force_sum() {
        let g = SpacetimeGrid::square(3.0, 8).unwrap();
        let op = quantize_weyl(&g, conjugate_symbol);
        assert!(op.periodization_error < 1e-12);
        let m = op.to_dense();
        let n = g.len();
        for r in (0..n).step_by(5) {
            for c in (0..n).step_by(3) {
                let (x, xp) = (g.point(r), g.point(c));
                let mid = [0.5 * (x[0] + xp[0]), 0.5 * (x[1] + xp[1])];
                let mut s = Complex64::new(0.0, 0.0);
                for kt in 0..g.nt {
                    for ky in 0..g.ny {
                        let xi = [g.tau(kt), g.eta(ky)];
                        let ph = (x[0] - xp[0]) * xi[0] + (x[1] - xp[1]) * xi[1];
                        s += Complex64::from_polar(conjugate_symbol(&PhasePoint::new(mid, xi)), ph);
                    }
                }
                s /= n as f64;
                assert!((m[(r, c)] - s).norm() < 1e-12, "{r} {c}");
            }
        }
    }
}
