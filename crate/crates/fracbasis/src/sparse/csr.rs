//! Compressed sparse row matrices and the shifted pencil A + tM.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Row count below which spmv runs serially; parallel splitting only pays off
/// on larger operators.
const PAR_SPMV_THRESHOLD: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::dims(format!(
                    "triplet ({r},{c}) outside {nrows}x{ncols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid("non-finite matrix entry"));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![0.0; triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let k = cursor[r];
            col_idx[k] = c;
            values[k] = v;
            cursor[r] += 1;
        }
        // Sort each row by column and merge duplicates in place.
        let mut out_ptr = vec![0usize; nrows + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend(
                col_idx[counts[r]..counts[r + 1]]
                    .iter()
                    .copied()
                    .zip(values[counts[r]..counts[r + 1]].iter().copied()),
            );
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = row[i].1;
                let mut j = i + 1;
                while j < row.len() && row[j].0 == c {
                    v += row[j].1;
                    j += 1;
                }
                out_cols.push(c);
                out_vals.push(v);
                i = j;
            }
            out_ptr[r + 1] = out_cols.len();
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr: out_ptr,
            col_idx: out_cols,
            values: out_vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        CsrMatrix {
            nrows: d.len(),
            ncols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims(format!(
                "spmv: vector length {} vs {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        if self.nrows >= PAR_SPMV_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                *yr = acc;
            });
        } else {
            for r in 0..self.nrows {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                y[r] = acc;
            }
        }
        Ok(y)
    }

    /// Maximum absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks numerical symmetry: |a_ij - a_ji| <= tol * max|a|.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                if (v - self.get(c, r)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let out = cursor[c];
                col_idx[out] = r;
                values[out] = self.values[k];
                cursor[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// Sparse product A * B using a dense row accumulator.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::dims(format!(
                "matmul: {}x{} * {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0f64; other.ncols];
        let mut in_row = vec![false; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.values[k];
                let mid = self.col_idx[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[k2];
                    if !in_row[c] {
                        in_row[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * other.values[k2];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_idx.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                in_row[c] = false;
            }
            touched.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// A + factor * M, with M given as a mass matrix.
    pub fn add_scaled_mass(&self, mass: &MassMatrix, factor: f64) -> Result<CsrMatrix> {
        let n = self.n();
        match mass {
            MassMatrix::Identity => {
                let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + n);
                for r in 0..n {
                    for (c, v) in self.row(r) {
                        trip.push((r, c, v));
                    }
                    trip.push((r, r, factor));
                }
                CsrMatrix::from_triplets(n, n, &trip)
            }
            MassMatrix::Matrix(m) => {
                if m.n() != n {
                    return Err(Error::dims("mass matrix dimension mismatch"));
                }
                let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + m.nnz());
                for r in 0..n {
                    for (c, v) in self.row(r) {
                        trip.push((r, c, v));
                    }
                    for (c, v) in m.row(r) {
                        trip.push((r, c, factor * v));
                    }
                }
                CsrMatrix::from_triplets(n, n, &trip)
            }
        }
    }

    pub fn to_dense(&self) -> crate::sparse::DenseMatrix {
        let mut d = crate::sparse::DenseMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }
}

/// The mass side of the pencil; finite-difference and graph problems carry no
/// assembled mass matrix, so the identity case is kept symbolic.
#[derive(Clone, Debug)]
pub enum MassMatrix {
    Identity,
    Matrix(CsrMatrix),
}

impl MassMatrix {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            MassMatrix::Identity => Ok(x.to_vec()),
            MassMatrix::Matrix(m) => m.spmv(x),
        }
    }

    pub fn diag(&self, n: usize) -> Vec<f64> {
        match self {
            MassMatrix::Identity => vec![1.0; n],
            MassMatrix::Matrix(m) => m.diag(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, MassMatrix::Identity)
    }
}

/// y = (A + t M) x without materializing the shifted matrix.
pub fn shifted_apply(a: &CsrMatrix, m: &MassMatrix, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = a.spmv(x)?;
    match m {
        MassMatrix::Identity => {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += t * xi;
            }
        }
        MassMatrix::Matrix(mm) => {
            let mx = mm.spmv(x)?;
            for (yi, mi) in y.iter_mut().zip(mx) {
                *yi += t * mi;
            }
        }
    }
    Ok(y)
}

/// A shifted SPD pencil A + shift * M viewed as a single operator.
pub struct ShiftedPair<'a> {
    pub a: &'a CsrMatrix,
    pub m: &'a MassMatrix,
    pub shift: f64,
}

impl<'a> ShiftedPair<'a> {
    pub fn new(a: &'a CsrMatrix, m: &'a MassMatrix, shift: f64) -> Self {
        ShiftedPair { a, m, shift }
    }

    pub fn dim(&self) -> usize {
        self.a.n()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        shifted_apply(self.a, self.m, self.shift, x)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates_and_sort() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0)]).unwrap();
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), 5.0, "duplicate entries must be summed");
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn identity_spmv_is_identity() {
        let a = CsrMatrix::identity(4);
        let x = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(a.spmv(&x).unwrap(), x);
    }

    #[test]
    fn spmv_rejects_bad_length() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn shifted_apply_matches_materialized_sum() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        )
        .unwrap();
        let m = MassMatrix::Matrix(CsrMatrix::from_diag(&[1.0, 2.0, 3.0]));
        let t = 0.7;
        let x = vec![0.3, -1.2, 2.5];
        let explicit = a.add_scaled_mass(&m, t).unwrap();
        let ours = shifted_apply(&a, &m, t, &x).unwrap();
        let theirs = explicit.spmv(&x).unwrap();
        for (u, v) in ours.iter().zip(&theirs) {
            assert!((u - v).abs() <= 1e-14 * v.abs().max(1.0));
        }
    }

    #[test]
    fn transpose_and_matmul_agree_with_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -3.0)]).unwrap();
        let at = a.transpose();
        assert_eq!(at.nrows(), 3);
        assert_eq!(at.get(2, 0), 2.0);
        let prod = a.matmul(&at).unwrap(); // 2x2: [[5, 0], [0, 9]]
        assert_eq!(prod.get(0, 0), 5.0);
        assert_eq!(prod.get(1, 1), 9.0);
        assert_eq!(prod.get(0, 1), 0.0);
    }

    #[test]
    fn symmetry_check() {
        let sym =
            CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert!(sym.is_symmetric(1e-12));
        let unsym = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(!unsym.is_symmetric(1e-12));
    }
}
