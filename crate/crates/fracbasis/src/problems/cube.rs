//! Finite-difference fractional Laplacian on the unit cube.
//!
//! The grid has K = 2^{level+2} intervals per axis, interior unknowns only,
//! and the standard 7-point stencil. The right-hand side is the first
//! Laplacian eigenfunction, which makes the discrete solution available in
//! closed form: the FD eigenvalue of sin(πx)sin(πy)sin(πz) is
//! 3(2 - 2cos(πh))/h², so u* = sqrt(3π²/λ_h) · v.

use std::f64::consts::PI;

use super::{DiscreteProblem, Family};
use crate::error::{Error, Result};
use crate::precond::{cube_index, ProblemStructure};
use crate::sparse::{CsrMatrix, MassMatrix, NormDescriptor};

pub const MIN_LEVEL: usize = 1;
pub const MAX_LEVEL: usize = 7;

/// Smallest eigenvalue of the 7-point FD Laplacian on grid spacing h:
/// 3(2 - 2cos(πh))/h².
pub fn fd_eigenvalue(h: f64) -> f64 {
    3.0 * (2.0 - 2.0 * (PI * h).cos()) / (h * h)
}

pub fn cube_fd(level: usize) -> Result<DiscreteProblem> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::invalid(format!(
            "cube level must lie in [{MIN_LEVEL}, {MAX_LEVEL}], got {level}"
        )));
    }
    let k = 1usize << (level + 2);
    let n1 = k - 1;
    let n = n1 * n1 * n1;
    let h = 1.0 / k as f64;
    let inv_h2 = (k * k) as f64;

    let mut triplets = Vec::with_capacity(7 * n);
    for l in 1..=n1 {
        for j in 1..=n1 {
            for i in 1..=n1 {
                let row = cube_index(k, i, j, l);
                triplets.push((row, row, 6.0 * inv_h2));
                if i > 1 {
                    triplets.push((row, cube_index(k, i - 1, j, l), -inv_h2));
                }
                if i < n1 {
                    triplets.push((row, cube_index(k, i + 1, j, l), -inv_h2));
                }
                if j > 1 {
                    triplets.push((row, cube_index(k, i, j - 1, l), -inv_h2));
                }
                if j < n1 {
                    triplets.push((row, cube_index(k, i, j + 1, l), -inv_h2));
                }
                if l > 1 {
                    triplets.push((row, cube_index(k, i, j, l - 1), -inv_h2));
                }
                if l < n1 {
                    triplets.push((row, cube_index(k, i, j, l + 1), -inv_h2));
                }
            }
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &triplets)?;

    // One sine table per axis is enough; the eigenvector is a tensor product.
    let sines: Vec<f64> = (1..=n1).map(|i| (PI * i as f64 * h).sin()).collect();
    let mut eigenvector = vec![0.0; n];
    for l in 1..=n1 {
        for j in 1..=n1 {
            let sjl = sines[j - 1] * sines[l - 1];
            for i in 1..=n1 {
                eigenvector[cube_index(k, i, j, l)] = sines[i - 1] * sjl;
            }
        }
    }

    let three_pi2 = 3.0 * PI * PI;
    let lambda_h = fd_eigenvalue(h);
    let f_scale = three_pi2.sqrt();
    let star_scale = (three_pi2 / lambda_h).sqrt();
    let rhs: Vec<f64> = eigenvector.iter().map(|v| f_scale * v).collect();
    let discrete_exact: Vec<f64> = eigenvector.iter().map(|v| star_scale * v).collect();

    Ok(DiscreteProblem {
        family: Family::Cube { level, intervals: k },
        a,
        mass: MassMatrix::Identity,
        rhs,
        lambda: 20.0 * inv_h2,
        norm: NormDescriptor::ScaledEuclidean {
            factor: (h * h * h).sqrt(),
        },
        structure: ProblemStructure::CubeGrid { intervals: k },
        exact: Some(eigenvector),
        discrete_exact: Some(discrete_exact),
    })
}
