//! Geometric multigrid V-cycle on uniform cube grids.
//!
//! The hierarchy halves the interval count per level, transfers by trilinear
//! interpolation with full-weighting restriction R = P^T/8, and coarsens
//! operators variationally (A_c = R A P), so the cycle is symmetric and the
//! invariance A_c = R A P holds exactly by construction. Smoothing is damped
//! Jacobi on both sides of the coarse correction; the coarsest grid is
//! solved densely.

use super::{check_input, Preconditioner, COARSE_SIZE_CAP};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, MassMatrix};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Interior-node count of a uniform cube grid with k intervals per side.
pub fn cube_unknowns(k: usize) -> usize {
    (k - 1).pow(3)
}

/// Lexicographic index of interior node (i, j, l), 1-based grid coordinates,
/// x fastest. Shared convention with the cube problem assembly.
pub fn cube_index(k: usize, i: usize, j: usize, l: usize) -> usize {
    let n1 = k - 1;
    (i - 1) + n1 * ((j - 1) + n1 * (l - 1))
}

struct HierarchyLevel {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    intervals: usize,
    /// Maps the next-coarser level up to this one; None on the coarsest.
    prolongation: Option<CsrMatrix>,
    /// Maps this level down to the next-coarser one (P^T / 8).
    restriction: Option<CsrMatrix>,
}

pub struct CubeHierarchy {
    levels: Vec<HierarchyLevel>,
}

impl CubeHierarchy {
    /// Builds the Galerkin hierarchy from the finest operator down to at
    /// most `COARSE_SIZE_CAP` unknowns.
    pub fn new(fine: CsrMatrix, intervals: usize) -> Result<Self> {
        if intervals < 2 || fine.n() != cube_unknowns(intervals) {
            return Err(Error::invalid(format!(
                "operator size {} does not match a cube grid with {} intervals",
                fine.n(),
                intervals
            )));
        }
        let mut levels = vec![make_level(fine, intervals)?];
        loop {
            let last = levels.last_mut().unwrap();
            if last.a.n() <= COARSE_SIZE_CAP {
                break;
            }
            if last.intervals % 2 != 0 || last.intervals < 4 {
                return Err(Error::invalid(format!(
                    "cannot coarsen a grid with {} intervals below {} unknowns",
                    last.intervals,
                    last.a.n()
                )));
            }
            let coarse_k = last.intervals / 2;
            let p = build_prolongation(last.intervals);
            let r = p.transpose().scaled(1.0 / 8.0);
            let coarse_a = r.matmul(&last.a.matmul(&p)?)?;
            last.prolongation = Some(p);
            last.restriction = Some(r);
            levels.push(make_level(coarse_a, coarse_k)?);
        }
        Ok(CubeHierarchy { levels })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn operator(&self, level: usize) -> &CsrMatrix {
        &self.levels[level].a
    }

    pub fn intervals(&self, level: usize) -> usize {
        self.levels[level].intervals
    }

    pub fn prolongation(&self, level: usize) -> Option<&CsrMatrix> {
        self.levels[level].prolongation.as_ref()
    }

    pub fn restriction(&self, level: usize) -> Option<&CsrMatrix> {
        self.levels[level].restriction.as_ref()
    }
}

fn make_level(a: CsrMatrix, intervals: usize) -> Result<HierarchyLevel> {
    let mut inv_diag = Vec::with_capacity(a.n());
    for (i, d) in a.diag().iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::Numeric(format!(
                "non-positive diagonal {d:e} at row {i} of a multigrid level"
            )));
        }
        inv_diag.push(1.0 / d);
    }
    Ok(HierarchyLevel {
        a,
        inv_diag,
        intervals,
        prolongation: None,
        restriction: None,
    })
}

/// Trilinear interpolation from the (k/2)-interval grid to the k-interval
/// grid, Dirichlet boundaries eliminated.
fn build_prolongation(fine_k: usize) -> CsrMatrix {
    let coarse_k = fine_k / 2;
    let weights_1d = |i: usize| -> Vec<(usize, f64)> {
        if i % 2 == 0 {
            vec![(i / 2, 1.0)]
        } else {
            vec![((i - 1) / 2, 0.5), ((i + 1) / 2, 0.5)]
        }
    };
    let mut trip = Vec::new();
    for l in 1..fine_k {
        let wl = weights_1d(l);
        for j in 1..fine_k {
            let wj = weights_1d(j);
            for i in 1..fine_k {
                let wi = weights_1d(i);
                let fine = cube_index(fine_k, i, j, l);
                for &(ci, wx) in &wi {
                    if ci == 0 || ci == coarse_k {
                        continue;
                    }
                    for &(cj, wy) in &wj {
                        if cj == 0 || cj == coarse_k {
                            continue;
                        }
                        for &(cl, wz) in &wl {
                            if cl == 0 || cl == coarse_k {
                                continue;
                            }
                            trip.push((
                                fine,
                                cube_index(coarse_k, ci, cj, cl),
                                wx * wy * wz,
                            ));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(cube_unknowns(fine_k), cube_unknowns(coarse_k), &trip)
        .expect("prolongation triplets are in range by construction")
}

pub struct GeometricMg {
    hierarchy: CubeHierarchy,
    coarse_solver: Cholesky<f64, Dyn>,
    sweeps: usize,
    damping: f64,
}

impl GeometricMg {
    pub fn new(
        a: &CsrMatrix,
        m: &MassMatrix,
        shift: f64,
        intervals: usize,
        sweeps: usize,
        damping: f64,
    ) -> Result<Self> {
        let fine = if shift == 0.0 {
            a.clone()
        } else {
            a.add_scaled_mass(m, shift)?
        };
        let hierarchy = CubeHierarchy::new(fine, intervals)?;
        let coarse = hierarchy.levels.last().unwrap();
        let nc = coarse.a.n();
        let dense = DMatrix::from_row_slice(nc, nc, coarse.a.to_dense().data());
        let coarse_solver = dense.cholesky().ok_or_else(|| {
            Error::Numeric("coarsest multigrid operator is not positive definite".into())
        })?;
        Ok(GeometricMg {
            hierarchy,
            coarse_solver,
            sweeps,
            damping,
        })
    }

    pub fn hierarchy(&self) -> &CubeHierarchy {
        &self.hierarchy
    }

    fn smooth(&self, level: &HierarchyLevel, x: &mut [f64], rhs: &[f64]) -> Result<()> {
        let ax = level.a.spmv(x)?;
        for ((xi, di), (ri, axi)) in x
            .iter_mut()
            .zip(&level.inv_diag)
            .zip(rhs.iter().zip(&ax))
        {
            *xi += self.damping * di * (ri - axi);
        }
        Ok(())
    }

    fn vcycle(&self, level: usize, rhs: &[f64]) -> Result<Vec<f64>> {
        let lvl = &self.hierarchy.levels[level];
        if level + 1 == self.hierarchy.levels.len() {
            let sol = self
                .coarse_solver
                .solve(&DVector::from_column_slice(rhs));
            return Ok(sol.as_slice().to_vec());
        }
        let mut x = vec![0.0; rhs.len()];
        for _ in 0..self.sweeps {
            self.smooth(lvl, &mut x, rhs)?;
        }
        let ax = lvl.a.spmv(&x)?;
        let residual: Vec<f64> = rhs.iter().zip(&ax).map(|(r, a)| r - a).collect();
        let coarse_rhs = lvl.restriction.as_ref().unwrap().spmv(&residual)?;
        let coarse_x = self.vcycle(level + 1, &coarse_rhs)?;
        let correction = lvl.prolongation.as_ref().unwrap().spmv(&coarse_x)?;
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        for _ in 0..self.sweeps {
            self.smooth(lvl, &mut x, rhs)?;
        }
        Ok(x)
    }
}

impl Preconditioner for GeometricMg {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_input(self.hierarchy.levels[0].a.n(), r)?;
        self.vcycle(0, r)
    }

    fn dim(&self) -> usize {
        self.hierarchy.levels[0].a.n()
    }

    fn name(&self) -> &'static str {
        "mg"
    }
}
