//! Small dense matrices for reduced systems, backed by row-major storage.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_rows(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::dims("dense matrix data length mismatch"));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims("dense apply: length mismatch"));
        }
        Ok((0..self.nrows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Symmetric part (A + A^T)/2; reduced matrices are symmetrized after
    /// projection to scrub accumulation noise.
    pub fn symmetrized(&self) -> DenseMatrix {
        debug_assert_eq!(self.nrows, self.ncols);
        let mut out = self.clone();
        for r in 0..self.nrows {
            for c in (r + 1)..self.ncols {
                let avg = 0.5 * (self[(r, c)] + self[(c, r)]);
                out[(r, c)] = avg;
                out[(c, r)] = avg;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max |A - I| over all entries.
    pub fn max_deviation_from_identity(&self) -> f64 {
        debug_assert_eq!(self.nrows, self.ncols);
        let mut dev = 0.0f64;
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                let target = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((self[(r, c)] - target).abs());
            }
        }
        dev
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows, self.ncols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.ncols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.ncols + c]
    }
}

/// Solves A x = b for symmetric positive definite A via Cholesky. When the
/// factorization fails (matrix numerically singular or indefinite), falls
/// back to a minimum-norm least-squares solution through the SVD and reports
/// the fallback in the second tuple slot.
pub fn dense_solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, bool)> {
    if a.nrows != a.ncols || a.nrows != b.len() {
        return Err(Error::dims("dense_solve_spd: shape mismatch"));
    }
    let na = a.to_nalgebra();
    let nb = DVector::from_column_slice(b);
    if let Some(chol) = na.clone().cholesky() {
        let x = chol.solve(&nb);
        return Ok((x.as_slice().to_vec(), false));
    }
    let svd = na.svd(true, true);
    let x = svd
        .solve(&nb, 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numeric(format!("SVD solve failed: {e}")))?;
    Ok((x.as_slice().to_vec(), true))
}

/// Solves the square system G x = b in the minimum-norm least-squares sense,
/// truncating singular values below `rel_tol * sigma_max`. Greedy Gram
/// systems become numerically rank-deficient long before the iteration stops
/// making progress, so plain LU is not an option here.
pub fn solve_min_norm(g: &DenseMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    if g.nrows != b.len() {
        return Err(Error::dims("solve_min_norm: shape mismatch"));
    }
    let ng = g.to_nalgebra();
    let nb = DVector::from_column_slice(b);
    let svd = ng.svd(true, true);
    let cutoff = rel_tol * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let x = svd
        .solve(&nb, cutoff)
        .map_err(|e| Error::Numeric(format!("SVD solve failed: {e}")))?;
    Ok(x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_exact() {
        // 2x2 SPD: [[4,1],[1,3]] x = [1,2] -> x = [1/11, 7/11]
        let a = DenseMatrix::from_rows(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap();
        let (x, fallback) = dense_solve_spd(&a, &[1.0, 2.0]).unwrap();
        assert!(!fallback);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_takes_min_norm_fallback() {
        let a = DenseMatrix::from_rows(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let (x, fallback) = dense_solve_spd(&a, &[2.0, 2.0]).unwrap();
        assert!(fallback);
        // Minimum-norm solution of x0 + x1 = 2 is (1, 1).
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn min_norm_handles_rank_deficiency() {
        let g = DenseMatrix::from_rows(2, 2, vec![1.0, 1.0, 1.0, 1.0 + 1e-16]).unwrap();
        let x = solve_min_norm(&g, &[1.0, 1.0], 1e-13).unwrap();
        let r0 = x[0] + x[1] - 1.0;
        assert!(r0.abs() < 1e-12);
    }

    #[test]
    fn symmetrize_averages_off_diagonal() {
        let a = DenseMatrix::from_rows(2, 2, vec![1.0, 2.0, 4.0, 5.0]).unwrap();
        let s = a.symmetrized();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
        assert_eq!(s[(0, 0)], 1.0);
    }
}
