//! Grid operators: sparse (CSR), dense, or a Chebyshev polynomial in a
//! sparse base operator.

use std::io::Write;
use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::grid::{GridError, SpacetimeGrid};
use crate::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `|g|^{1/4} P |g|^{−1/4}` in the flat inner product.
    P1,
    Conjugate,
    Weyl,
    Absorber,
    Weight,
    Window,
    Commutator,
    Other,
}

/// Compressed sparse rows with sorted, de-duplicated columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Complex64>,
}

impl Csr {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col[k], self.val[k])))
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        crate::par::map_range(self.n, |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.val[k] * x[self.col[k]]).sum())
    }

    /// `self + diag(d)`.
    pub fn plus_diagonal(&self, d: &[Complex64]) -> Self {
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        Self::from_triplets(self.n, t)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { val: self.val.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn to_faer(&self) -> SparseColMat<usize, Complex64> {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &t).expect("valid triplets")
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Gershgorin bounds on the real parts of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.n {
            let mut d = 0.0;
            let mut off = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col[k] == r {
                    d = self.val[k].re;
                } else {
                    off += self.val[k].norm();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }
}

/// `Σ c_k T_k(Ã)` with `Ã = (A − center)/half_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevSeries {
    pub base: Csr,
    pub center: f64,
    pub half_width: f64,
    pub coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let scaled = |v: &[Complex64]| -> Vec<Complex64> {
            let av = self.base.apply(v);
            av.iter().zip(v).map(|(a, b)| (a - b * self.center) / self.half_width).collect()
        };
        let mut t0 = x.to_vec();
        let mut out: Vec<Complex64> = x.iter().map(|v| v * self.coeffs[0]).collect();
        if self.coeffs.len() == 1 {
            return out;
        }
        let mut t1 = scaled(x);
        for (o, v) in out.iter_mut().zip(&t1) {
            *o += v * self.coeffs[1];
        }
        for &c in &self.coeffs[2..] {
            let at = scaled(&t1);
            let t2: Vec<Complex64> = at.iter().zip(&t0).map(|(a, b)| a * 2.0 - b).collect();
            for (o, v) in out.iter_mut().zip(&t2) {
                *o += v * c;
            }
            t0 = std::mem::replace(&mut t1, t2);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorData {
    Sparse(Csr),
    Dense(Mat<Complex64>),
    Chebyshev(ChebyshevSeries),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOperator {
    pub grid: SpacetimeGrid,
    pub kind: OperatorKind,
    pub hermitian: bool,
    /// `max |O − O†|` recorded at construction (Weyl periodisation error).
    pub periodization_error: f64,
    pub data: OperatorData,
}

pub fn dense_apply(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let xm = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let y = m * &xm;
    (0..m.nrows()).map(|i| y[(i, 0)]).collect()
}

impl GridOperator {
    pub fn sparse(grid: SpacetimeGrid, kind: OperatorKind, hermitian: bool, csr: Csr) -> Self {
        Self { grid, kind, hermitian, periodization_error: 0.0, data: OperatorData::Sparse(csr) }
    }

    pub fn dense(grid: SpacetimeGrid, kind: OperatorKind, hermitian: bool, m: Mat<Complex64>) -> Self {
        Self { grid, kind, hermitian, periodization_error: 0.0, data: OperatorData::Dense(m) }
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.data {
            OperatorData::Sparse(c) => c.apply(x),
            OperatorData::Dense(m) => dense_apply(m, x),
            OperatorData::Chebyshev(s) => s.apply(x),
        }
    }

    pub fn as_csr(&self) -> Option<&Csr> {
        match &self.data {
            OperatorData::Sparse(c) => Some(c),
            _ => None,
        }
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        match &self.data {
            OperatorData::Sparse(c) => c.to_dense(),
            OperatorData::Dense(m) => m.clone(),
            OperatorData::Chebyshev(s) => {
                let n = self.dim();
                let cols = crate::par::map_range(n, |j| {
                    let mut e = vec![Complex64::new(0.0, 0.0); n];
                    e[j] = Complex64::new(1.0, 0.0);
                    s.apply(&e)
                });
                Mat::from_fn(n, n, |i, j| cols[j][i])
            }
        }
    }

    /// `max |O_{ij} − conj(O_{ji})|`.
    pub fn hermitian_defect(&self) -> f64 {
        match &self.data {
            OperatorData::Sparse(c) => {
                let mut t: Vec<_> = c.triplets().map(|(r, cc, v)| ((r, cc), v)).collect();
                t.sort_by_key(|e| e.0);
                let get = |r: usize, cc: usize| t.binary_search_by_key(&(r, cc), |e| e.0).map(|k| t[k].1).unwrap_or_default();
                c.triplets().map(|(r, cc, v)| (v - get(cc, r).conj()).norm()).fold(0.0, f64::max)
            }
            _ => {
                let m = self.to_dense();
                let n = m.nrows();
                let mut d: f64 = 0.0;
                for i in 0..n {
                    for j in i..n {
                        d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                d
            }
        }
    }

    /// Coordinate text format: a header line `n nnz`, then `row col re im`.
    pub fn write_triplets(&self, path: &Path) -> Result<(), GridError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let entries: Vec<(usize, usize, Complex64)> = match &self.data {
            OperatorData::Sparse(c) => c.triplets().collect(),
            _ => {
                let m = self.to_dense();
                let n = m.nrows();
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])).filter(|e| e.2.norm() != 0.0).collect()
            }
        };
        writeln!(f, "{} {}", self.dim(), entries.len())?;
        for (r, c, v) in entries {
            writeln!(f, "{r} {c} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Parses the coordinate format written by [`GridOperator::write_triplets`].
pub fn read_triplets(path: &Path) -> Result<Csr, GridError> {
    let s = std::fs::read_to_string(path)?;
    let mut lines = s.lines();
    let bad = || GridError::Invalid("malformed triplet file".into());
    let head: Vec<usize> = lines.next().ok_or_else(bad)?.split_whitespace().map(|x| x.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let n = *head.first().ok_or_else(bad)?;
    let mut t = Vec::new();
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let r = f[0].parse().map_err(|_| bad())?;
        let c = f[1].parse().map_err(|_| bad())?;
        let re: f64 = f[2].parse().map_err(|_| bad())?;
        let im: f64 = f[3].parse().map_err(|_| bad())?;
        t.push((r, c, Complex64::new(re, im)));
    }
    Ok(Csr::from_triplets(n, t))
}
