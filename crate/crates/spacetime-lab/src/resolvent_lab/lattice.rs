//! Green's function of the flat five-point operator on the infinite lattice
//! `h_t ℤ × h_y ℤ`, used as an absorber-free reference for weighted resolvent
//! norms.
//!
//! For `σ(θ, φ) = −(2 − 2cos θ)/h_t² + (2 − 2cos φ)/h_y² − z` the kernel is
//! `G(d) = (2π)^{−2} ∫∫ e^{i(d_t θ + d_y φ)} / σ`. The `θ` integral is a
//! contour integral over `|w| = 1` and equals `h_t² w₁^{|d_t|} / (w₁ − w₂)`,
//! where `w₁` is the root of `w² + b w + 1` inside the disc and
//! `b = (η̂² − z) h_t² − 2`. The remaining `φ` integral has inverse square
//! root singularities where `|b| = 2`; each piece between them is mapped by
//! `φ = α + (β − α)(1 − cos ϑ)/2`, which absorbs the singularity.

use super::power::{operator_norm, NormEstimate, PowerOptions};
use super::ResolventError;
use crate::grid_calculus::{Fft2, SpacetimeGrid};
use crate::Complex64;

const NODES_PER_PIECE: usize = 4000;

/// Root of `w² + b w + 1` inside the unit disc. For real `b` in `(−2, 2)` the
/// roots sit on the circle and the limit from `Im z > 0` is taken.
fn inner_root(b: Complex64) -> Complex64 {
    if b.im == 0.0 && b.re.abs() < 2.0 {
        let s = (4.0 - b.re * b.re).sqrt();
        return Complex64::new(-0.5 * b.re, -0.5 * s);
    }
    let d = (b * b - 4.0).sqrt();
    let (r1, r2) = (0.5 * (-b + d), 0.5 * (-b - d));
    if r1.norm() <= r2.norm() {
        r1
    } else {
        r2
    }
}

/// `G(d_t, d_y)` for `0 ≤ d_t < nt`, `0 ≤ d_y < ny` (the kernel is even in
/// both offsets), row-major in `d_t`. Requires `Im z ≥ 0`.
pub fn lattice_green(grid: &SpacetimeGrid, z: Complex64) -> Vec<Complex64> {
    let (ht, hy) = (grid.ht(), grid.hy());
    let (nt, ny) = (grid.nt, grid.ny);
    let eta2 = |phi: f64| (2.0 - 2.0 * phi.cos()) / (hy * hy);
    // Breakpoints: η̂² = Re z and η̂² = Re z + 4/h_t².
    let mut cuts = vec![0.0, std::f64::consts::PI];
    for target in [z.re, z.re + 4.0 / (ht * ht)] {
        let c = 1.0 - 0.5 * hy * hy * target;
        if c > -1.0 && c < 1.0 {
            cuts.push(c.acos());
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // Quadrature nodes with weights folding in 1/π and h_t²/(w₁ − w₂).
    let mut nodes: Vec<(f64, Complex64, Complex64)> = Vec::new();
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let m = NODES_PER_PIECE;
        let dth = std::f64::consts::PI / m as f64;
        for k in 0..m {
            let th = (k as f64 + 0.5) * dth;
            let phi = a + 0.5 * (b - a) * (1.0 - th.cos());
            let jac = 0.5 * (b - a) * th.sin() * dth;
            let bb = (Complex64::new(eta2(phi), 0.0) - z) * (ht * ht) - 2.0;
            let w1 = inner_root(bb);
            let w = jac / std::f64::consts::PI * ht * ht / (w1 - 1.0 / w1);
            nodes.push((phi, w1, w));
        }
    }
    let rows = crate::par::map_range(nt, |dt| {
        let mut row = vec![Complex64::new(0.0, 0.0); ny];
        for &(phi, w1, w) in &nodes {
            let c = w * w1.powi(dt as i32);
            for (dy, r) in row.iter_mut().enumerate() {
                *r += c * (dy as f64 * phi).cos();
            }
        }
        row
    });
    rows.concat()
}

/// Convolution with an even lattice kernel, by zero-padded FFT.
struct KernelConvolution {
    nt: usize,
    ny: usize,
    fft: Fft2,
    spectrum: Vec<Complex64>,
}

impl KernelConvolution {
    fn new(nt: usize, ny: usize, kernel: &[Complex64]) -> Self {
        let (mt, my) = (2 * nt, 2 * ny);
        let fft = Fft2::new(mt, my);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); mt * my];
        for a in 0..mt {
            for b in 0..my {
                let dt = if a < nt { a } else { mt - a };
                let dy = if b < ny { b } else { my - b };
                if dt < nt && dy < ny {
                    spectrum[a * my + b] = kernel[dt * ny + dy];
                }
            }
        }
        fft.forward(&mut spectrum);
        Self { nt, ny, fft, spectrum }
    }

    fn apply(&self, u: &[Complex64], conjugate: bool) -> Vec<Complex64> {
        let (mt, my) = (2 * self.nt, 2 * self.ny);
        let mut buf = vec![Complex64::new(0.0, 0.0); mt * my];
        for i in 0..self.nt {
            buf[i * my..i * my + self.ny].copy_from_slice(&u[i * self.ny..(i + 1) * self.ny]);
        }
        self.fft.forward(&mut buf);
        // The kernel is even, so its conjugate has the conjugate spectrum
        // reflected, which for an even kernel is the conjugate itself.
        for (x, k) in buf.iter_mut().zip(&self.spectrum) {
            *x *= if conjugate { k.conj() } else { *k };
        }
        self.fft.inverse_normalized(&mut buf);
        let mut out = Vec::with_capacity(self.nt * self.ny);
        for i in 0..self.nt {
            out.extend_from_slice(&buf[i * my..i * my + self.ny]);
        }
        out
    }
}

/// `‖M G M‖` for a diagonal weight `M` on the grid points and the lattice
/// kernel at `z`.
pub fn lattice_weighted_norm(grid: &SpacetimeGrid, z: Complex64, weight: &[f64], opts: &PowerOptions) -> Result<NormEstimate, ResolventError> {
    let conv = KernelConvolution::new(grid.nt, grid.ny, &lattice_green(grid, z));
    let mul = |v: &[Complex64]| -> Vec<Complex64> { v.iter().zip(weight).map(|(a, w)| a * w).collect() };
    operator_norm(
        grid.len(),
        |v| Ok(mul(&conv.apply(&mul(v), false))),
        |v| Ok(mul(&conv.apply(&mul(v), true))),
        opts,
    )
}

/// Applies the lattice resolvent at `z` to a grid function supported in the
/// box (values outside are taken to be zero).
pub fn lattice_resolvent_apply(grid: &SpacetimeGrid, z: Complex64, f: &[Complex64]) -> Vec<Complex64> {
    KernelConvolution::new(grid.nt, grid.ny, &lattice_green(grid, z)).apply(f, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calculus::{assemble_p, GridFunction};
    use crate::metric_symbols::InverseMetricField;

    #[test]
    fn inner_root_is_inside() {
        for b in [Complex64::new(3.0, 0.0), Complex64::new(-2.5, 0.0), Complex64::new(0.3, -0.1), Complex64::new(1.0, -1e-9)] {
            let w = inner_root(b);
            assert!(w.norm() <= 1.0 + 1e-12);
            assert!((w * w + b * w + 1.0).norm() < 1e-12);
        }
        // Limit from Im b < 0 on the circle.
        let lim = inner_root(Complex64::new(0.5, 0.0));
        let near = inner_root(Complex64::new(0.5, -1e-10));
        assert!((lim - near).norm() < 1e-9);
    }

    #[test]
    fn kernel_inverts_the_stencil() {
        // Applying the five-point operator to G gives a unit impulse.
        let g = SpacetimeGrid::new(8.0, 6.0, 32, 24).unwrap();
        let z = Complex64::new(0.8, 0.3);
        let k = lattice_green(&g, z);
        let (ht, hy) = (g.ht(), g.hy());
        let at = |a: i64, b: i64| k[(a.unsigned_abs() as usize) * g.ny + b.unsigned_abs() as usize];
        for (a, b) in [(0i64, 0i64), (1, 0), (3, 2), (5, 7)] {
            let v = (at(a + 1, b) - 2.0 * at(a, b) + at(a - 1, b)) / (ht * ht) - (at(a, b + 1) - 2.0 * at(a, b) + at(a, b - 1)) / (hy * hy)
                - z * at(a, b);
            let want = if a == 0 && b == 0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-6, "({a},{b}) {v}");
        }
    }

    #[test]
    fn matches_damped_box_solve_for_smooth_source() {
        let g = SpacetimeGrid::square(12.0, 96).unwrap();
        let p = assemble_p(&InverseMetricField::flat(), &g).unwrap();
        let z = Complex64::new(1.0, 3.0);
        let f = GridFunction::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0));
        let sys = super::super::solve::ShiftedSystem::with_absorber(&p, &vec![0.0; g.len()], z).unwrap();
        let u = sys.solve(&f.values).unwrap();
        let v = lattice_resolvent_apply(&g, z, &f.values);
        let inside: Vec<usize> = (0..g.len()).filter(|&k| g.point(k)[0].hypot(g.point(k)[1]) < 3.0).collect();
        let err = inside.iter().map(|&k| (u[k] - v[k]).norm()).fold(0.0, f64::max);
        let size = inside.iter().map(|&k| v[k].norm()).fold(0.0, f64::max);
        assert!(err < 1e-5 * size, "{err} vs {size}");
    }
}
