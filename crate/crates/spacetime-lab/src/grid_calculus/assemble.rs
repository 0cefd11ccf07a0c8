//! Conservative second-order discretisation of `P = −□_g + V`, conjugated
//! to the flat inner product.

use super::grid::{GridError, SpacetimeGrid};
use super::operator::{Csr, GridOperator, OperatorKind};
use crate::metric_symbols::InverseMetricField;
use crate::{Complex64, Vec2};

/// `|g|^{1/2} g^{jk}` at `x`, as `[tt, ty, yy]`.
fn density_metric(field: &InverseMetricField, x: Vec2) -> [f64; 3] {
    let g = field.inverse_metric(x);
    let s = field.sqrt_abs_g(x);
    [s * g[0][0], s * g[0][1], s * g[1][1]]
}

/// `w = |g|^{1/4}` at every grid point.
pub fn quarter_density(field: &InverseMetricField, grid: &SpacetimeGrid) -> Vec<f64> {
    (0..grid.len()).map(|k| field.sqrt_abs_g(grid.point(k)).sqrt()).collect()
}

/// `P₁ = |g|^{1/4} P |g|^{−1/4} = −w^{−1}∂_j(|g|^{1/2}g^{jk}∂_k(w^{−1}·)) + V`
/// with Dirichlet truncation. The second-order part is assembled as a
/// symmetric matrix `S` (three-point fluxes with midpoint coefficients for
/// `j = k`, products of centred differences for the cross term) and then
/// scaled to `W^{−1} S W^{−1}`, so the result is exactly symmetric.
pub fn assemble_p(field: &InverseMetricField, grid: &SpacetimeGrid) -> Result<GridOperator, GridError> {
    grid.validate()?;
    let h = grid.ht().max(grid.hy());
    if !field.is_flat() {
        let width = field.spec().bump_width;
        if width / h < 8.0 {
            return Err(GridError::Resolution { h, width });
        }
    }
    let (nt, ny) = (grid.nt, grid.ny);
    let (ht, hy) = (grid.ht(), grid.hy());
    let w = quarter_density(field, grid);
    let rows = crate::par::map_range(nt, |i| {
        let mut t: Vec<(usize, usize, Complex64)> = Vec::with_capacity(ny * 9);
        let mut push = |r: usize, c: usize, v: f64| t.push((r, c, Complex64::new(v, 0.0)));
        for j in 0..ny {
            let k = grid.index(i, j);
            let x = grid.point(k);
            // −∂_t(G^{tt}∂_t): fluxes at t ± h/2.
            let gp = density_metric(field, [x[0] + 0.5 * ht, x[1]])[0] / (ht * ht);
            let gm = density_metric(field, [x[0] - 0.5 * ht, x[1]])[0] / (ht * ht);
            push(k, k, gp + gm);
            if i + 1 < nt {
                push(k, grid.index(i + 1, j), -gp);
            }
            if i > 0 {
                push(k, grid.index(i - 1, j), -gm);
            }
            let gp = density_metric(field, [x[0], x[1] + 0.5 * hy])[2] / (hy * hy);
            let gm = density_metric(field, [x[0], x[1] - 0.5 * hy])[2] / (hy * hy);
            push(k, k, gp + gm);
            if j + 1 < ny {
                push(k, grid.index(i, j + 1), -gp);
            }
            if j > 0 {
                push(k, grid.index(i, j - 1), -gm);
            }
            // −(D_t G^{ty} D_y + D_y G^{ty} D_t) with centred D: row k couples
            // to (i±1, j±1) through G^{ty} at (i±1, j) and (i, j±1).
            if !field.is_product_form() && !field.is_flat() {
                let c = 1.0 / (4.0 * ht * hy);
                for (di, dj) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nt as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let s = (di * dj) as f64;
                    // D_t G D_y: (D_t)_{k,(i+di,j)} = di/(2ht), G at (i+di, j),
                    // (D_y)_{(i+di,j),(i+di,j+dj)} = dj/(2hy).
                    let g1 = density_metric(field, [grid.t(ii as usize), x[1]])[1];
                    let g2 = density_metric(field, [x[0], grid.y(jj as usize)])[1];
                    push(k, grid.index(ii as usize, jj as usize), -s * c * (g1 + g2));
                }
            }
        }
        t
    });
    let mut trip: Vec<(usize, usize, Complex64)> = rows.into_iter().flatten().map(|(r, c, v)| (r, c, v / (w[r] * w[c]))).collect();
    for k in 0..grid.len() {
        let v = field.potential(grid.point(k));
        if v != 0.0 {
            trip.push((k, k, Complex64::new(v, 0.0)));
        }
    }
    Ok(GridOperator::sparse(*grid, OperatorKind::P1, true, Csr::from_triplets(grid.len(), trip)))
}
