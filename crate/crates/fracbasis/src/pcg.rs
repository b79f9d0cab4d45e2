//! Preconditioned conjugate gradients, keeping the full direction history.
//!
//! Unlike a plain linear solver, the caller here wants the m conjugate
//! directions p_0..p_{m-1} and their energies l_k = p_k' A p_k: they form
//! the reduced basis. The iterate returned after m steps is the Galerkin
//! minimizer over span{p_0..p_{m-1}}, which is exactly the subspace solution
//! the reduced method reproduces.

use crate::error::{Error, Result};
use crate::precond::Preconditioner;
use crate::sparse::{dot, norm2, CsrMatrix, DenseMatrix, ShiftedPair};

/// Residuals at or below this fraction of ||b|| stop the iteration even
/// without an explicit tolerance: the system is solved to working precision
/// and further directions would be numerical noise.
const EXACT_STOP_REL: f64 = 1e-15;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spmv(x)
    }
}

impl LinearOperator for ShiftedPair<'_> {
    fn dim(&self) -> usize {
        ShiftedPair::dim(self)
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        ShiftedPair::apply(self, x)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        DenseMatrix::apply(self, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIters,
    TolReached,
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct PcgResult {
    /// x_0, x_1, ..., x_k (k = iterations performed).
    pub iterates: Vec<Vec<f64>>,
    /// p_0, ..., p_{k-1}, un-normalized.
    pub directions: Vec<Vec<f64>>,
    /// l_j = p_j' A p_j for each direction.
    pub energies: Vec<f64>,
    /// Step sizes, one per iteration.
    pub alphas: Vec<f64>,
    /// Direction-update coefficients, one per direction after the first.
    pub betas: Vec<f64>,
    /// ||r_0||, ..., ||r_k|| (euclidean).
    pub residual_norms: Vec<f64>,
    pub termination: Termination,
    /// Present when termination is Breakdown.
    pub breakdown: Option<String>,
}

impl PcgResult {
    pub fn solution(&self) -> &[f64] {
        self.iterates.last().expect("iterates always hold x_0")
    }

    pub fn iterations(&self) -> usize {
        self.directions.len()
    }
}

/// Runs PCG on `op x = b` from a zero initial guess.
pub fn pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn Preconditioner,
    max_iters: usize,
    tol: Option<f64>,
) -> Result<PcgResult> {
    pcg_from(op, b, None, precond, max_iters, tol)
}

/// Runs PCG with an optional nonzero initial guess, handled by shifting the
/// initial residual to b - A x_0.
pub fn pcg_from(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    max_iters: usize,
    tol: Option<f64>,
) -> Result<PcgResult> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::dims(format!(
            "pcg: rhs length {} vs operator dimension {n}",
            b.len()
        )));
    }
    if precond.dim() != n {
        return Err(Error::dims("pcg: preconditioner dimension mismatch"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("pcg: non-finite right-hand side"));
    }
    if max_iters == 0 {
        return Err(Error::invalid("pcg: need at least one iteration"));
    }
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid("pcg: tolerance must lie in (0,1)"));
        }
    }

    let mut x = match x0 {
        Some(v) => {
            if v.len() != n {
                return Err(Error::dims("pcg: initial guess length mismatch"));
            }
            v.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = match x0 {
        Some(_) => {
            let ax = op.apply(&x)?;
            b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
        }
        None => b.to_vec(),
    };

    let b_norm = norm2(b);
    let stop_threshold = tol
        .map(|t| t * b_norm)
        .unwrap_or(0.0)
        .max(EXACT_STOP_REL * b_norm);

    let mut result = PcgResult {
        iterates: vec![x.clone()],
        directions: Vec::new(),
        energies: Vec::new(),
        alphas: Vec::new(),
        betas: Vec::new(),
        residual_norms: vec![norm2(&r)],
        termination: Termination::MaxIters,
        breakdown: None,
    };

    if result.residual_norms[0] <= stop_threshold {
        result.termination = Termination::TolReached;
        return Ok(result);
    }

    let mut z = precond.apply(&r)?;
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) || !rz.is_finite() {
        result.termination = Termination::Breakdown;
        result.breakdown = Some(format!(
            "initial r'z = {rz:e}; preconditioner is not positive definite"
        ));
        return Ok(result);
    }
    let mut p = z.clone();

    for k in 1..=max_iters {
        let ap = op.apply(&p)?;
        let l = dot(&p, &ap);
        if !(l > 0.0) || !l.is_finite() {
            result.termination = Termination::Breakdown;
            result.breakdown = Some(format!(
                "p'Ap = {l:e} at iteration {k}; operator is not positive definite"
            ));
            return Ok(result);
        }
        let alpha = rz / l;
        result.directions.push(p.clone());
        result.energies.push(l);
        result.alphas.push(alpha);

        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        result.iterates.push(x.clone());
        let rn = norm2(&r);
        result.residual_norms.push(rn);

        if rn <= stop_threshold {
            result.termination = Termination::TolReached;
            return Ok(result);
        }
        if k == max_iters {
            result.termination = Termination::MaxIters;
            return Ok(result);
        }

        z = precond.apply(&r)?;
        let rz_next = dot(&r, &z);
        if !(rz_next > 0.0) || !rz_next.is_finite() {
            result.termination = Termination::Breakdown;
            result.breakdown = Some(format!(
                "r'z = {rz_next:e} after iteration {k}; preconditioner is not positive definite"
            ));
            return Ok(result);
        }
        let beta = rz_next / rz;
        result.betas.push(beta);
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    unreachable!("loop always returns at k == max_iters");
}
