//! Aggregation-based algebraic multilevel preconditioner.
//!
//! For problems without a structured grid hierarchy (surface meshes,
//! graphs), levels are built by greedy strength-based aggregation with
//! piecewise-constant transfer and Galerkin coarsening. Smoothing matches
//! the geometric cycle (damped Jacobi both sides); V- and W-cycles are
//! supported.

use super::{check_input, CycleKind, Preconditioner, COARSE_SIZE_CAP};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, MassMatrix};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub const DEFAULT_STRENGTH_THETA: f64 = 0.08;

/// Greedy aggregation: returns (aggregate id per node, aggregate count).
///
/// Neighbor j is a strong connection of i when |a_ij| >= theta * max
/// off-diagonal magnitude of row i. The first pass turns every node whose
/// strong neighborhood is still untouched into a seed aggregate together
/// with those neighbors; the second pass attaches each leftover node to the
/// aggregate behind its strongest connection, or makes it a singleton.
pub fn build_aggregates(a: &CsrMatrix, theta: f64) -> (Vec<usize>, usize) {
    let n = a.n();
    const UNASSIGNED: usize = usize::MAX;
    let mut agg = vec![UNASSIGNED; n];
    let mut count = 0;

    let strong_threshold: Vec<f64> = (0..n)
        .map(|i| {
            let max_off = a
                .row(i)
                .filter(|&(c, _)| c != i)
                .map(|(_, v)| v.abs())
                .fold(0.0f64, f64::max);
            theta * max_off
        })
        .collect();
    let is_strong = |i: usize, j: usize, v: f64| -> bool {
        j != i && strong_threshold[i] > 0.0 && v.abs() >= strong_threshold[i]
    };

    for i in 0..n {
        if agg[i] != UNASSIGNED {
            continue;
        }
        let mut any_assigned = false;
        for (j, v) in a.row(i) {
            if is_strong(i, j, v) && agg[j] != UNASSIGNED {
                any_assigned = true;
                break;
            }
        }
        if any_assigned {
            continue;
        }
        agg[i] = count;
        for (j, v) in a.row(i) {
            if is_strong(i, j, v) {
                agg[j] = count;
            }
        }
        count += 1;
    }

    for i in 0..n {
        if agg[i] != UNASSIGNED {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, v) in a.row(i) {
            if is_strong(i, j, v) && agg[j] != UNASSIGNED {
                let mag = v.abs();
                if best.map_or(true, |(_, bm)| mag > bm) {
                    best = Some((agg[j], mag));
                }
            }
        }
        match best {
            Some((id, _)) => agg[i] = id,
            None => {
                agg[i] = count;
                count += 1;
            }
        }
    }
    (agg, count)
}

/// Galerkin coarse operator P^T A P for piecewise-constant P over the
/// aggregates, accumulated directly from the fine entries.
fn coarse_operator(a: &CsrMatrix, agg: &[usize], count: usize) -> Result<CsrMatrix> {
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..a.n() {
        for (j, v) in a.row(i) {
            trip.push((agg[i], agg[j], v));
        }
    }
    CsrMatrix::from_triplets(count, count, &trip)
}

struct AmlLevel {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    /// Aggregate map down to the next-coarser level; None on the coarsest.
    aggregates: Option<Vec<usize>>,
}

pub struct AggregationAml {
    levels: Vec<AmlLevel>,
    coarse_solver: Cholesky<f64, Dyn>,
    cycle: CycleKind,
    sweeps: usize,
    damping: f64,
}

impl AggregationAml {
    pub fn new(
        a: &CsrMatrix,
        m: &MassMatrix,
        shift: f64,
        cycle: CycleKind,
        sweeps: usize,
        damping: f64,
    ) -> Result<Self> {
        let fine = if shift == 0.0 {
            a.clone()
        } else {
            a.add_scaled_mass(m, shift)?
        };
        let mut levels = vec![make_level(fine)?];
        loop {
            let last_a = &levels.last().unwrap().a;
            let n = last_a.n();
            if n <= COARSE_SIZE_CAP {
                break;
            }
            let (agg, count) = build_aggregates(last_a, DEFAULT_STRENGTH_THETA);
            if count >= n {
                // No coarsening progress (e.g. diagonal matrices aggregate
                // into singletons); fall through to a dense coarse solve.
                break;
            }
            let coarse = coarse_operator(last_a, &agg, count)?;
            levels.last_mut().unwrap().aggregates = Some(agg);
            levels.push(make_level(coarse)?);
        }
        let coarse = &levels.last().unwrap().a;
        let nc = coarse.n();
        let dense = DMatrix::from_row_slice(nc, nc, coarse.to_dense().data());
        let coarse_solver = dense.cholesky().ok_or_else(|| {
            Error::Numeric("coarsest aggregation operator is not positive definite".into())
        })?;
        Ok(AggregationAml {
            levels,
            coarse_solver,
            cycle,
            sweeps,
            damping,
        })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.levels[level].a.n()
    }

    fn smooth(&self, level: &AmlLevel, x: &mut [f64], rhs: &[f64]) -> Result<()> {
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

    fn cycle(&self, level: usize, rhs: &[f64]) -> Result<Vec<f64>> {
        let lvl = &self.levels[level];
        if level + 1 == self.levels.len() {
            let sol = self
                .coarse_solver
                .solve(&DVector::from_column_slice(rhs));
            return Ok(sol.as_slice().to_vec());
        }
        let agg = lvl.aggregates.as_ref().unwrap();
        let coarse_a = &self.levels[level + 1].a;
        let mut x = vec![0.0; rhs.len()];
        for _ in 0..self.sweeps {
            self.smooth(lvl, &mut x, rhs)?;
        }
        let ax = lvl.a.spmv(&x)?;
        // Restriction for piecewise-constant transfer is aggregate summing.
        let mut coarse_rhs = vec![0.0; coarse_a.n()];
        for (i, (r, a)) in rhs.iter().zip(&ax).enumerate() {
            coarse_rhs[agg[i]] += r - a;
        }
        let mut ec = self.cycle(level + 1, &coarse_rhs)?;
        if self.cycle == CycleKind::W && level + 2 < self.levels.len() {
            // Second recursive visit on the coarse problem.
            let ac_ec = coarse_a.spmv(&ec)?;
            let rc2: Vec<f64> = coarse_rhs
                .iter()
                .zip(&ac_ec)
                .map(|(r, a)| r - a)
                .collect();
            let e2 = self.cycle(level + 1, &rc2)?;
            for (e, d) in ec.iter_mut().zip(&e2) {
                *e += d;
            }
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += ec[agg[i]];
        }
        for _ in 0..self.sweeps {
            self.smooth(lvl, &mut x, rhs)?;
        }
        Ok(x)
    }
}

fn make_level(a: CsrMatrix) -> Result<AmlLevel> {
    let mut inv_diag = Vec::with_capacity(a.n());
    for (i, d) in a.diag().iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::Numeric(format!(
                "non-positive diagonal {d:e} at row {i} of an aggregation level"
            )));
        }
        inv_diag.push(1.0 / d);
    }
    Ok(AmlLevel {
        a,
        inv_diag,
        aggregates: None,
    })
}

impl Preconditioner for AggregationAml {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_input(self.levels[0].a.n(), r)?;
        self.cycle(0, r)
    }

    fn dim(&self) -> usize {
        self.levels[0].a.n()
    }

    fn name(&self) -> &'static str {
        "aml"
    }
}
