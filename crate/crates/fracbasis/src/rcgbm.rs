//! Reduced conjugate-gradient basis method.
//!
//! One PCG run on the sample system (Ã + dM)x = f yields m search directions.
//! Normalized by their energies they form an (Ã + dM)-orthonormal basis P, and
//! every shifted system (Ã + t_i M)u = f is then solved by a dense m×m
//! Galerkin problem (PᵀÃP + t_i PᵀMP)y = Pᵀf in that fixed subspace. The
//! fractional solution is the residue-weighted sum Λ^{-s} Σ c_i P y_i.
//!
//! In floating point the CG directions lose mutual conjugacy as soon as a
//! Ritz value converges, so the basis is explicitly re-orthonormalized by two
//! passes of modified Gram–Schmidt in the (Ã + dM) inner product. This leaves
//! the span — and therefore every Galerkin solution — unchanged while keeping
//! the orthonormality defect at rounding level; directions whose independent
//! component falls below a drop threshold are discarded.
//!
//! Rescaling contract: the stiffness handed to this module is divided by the
//! spectral bound once (Ã = A/Λ), the approximant's shifts are used verbatim,
//! and the assembled sum is multiplied by Λ^{-s} at the end.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::pcg::{pcg, Termination};
use crate::precond::{self, PrecondKind, PrecondSpec, Preconditioner};
use crate::problems::{DiscreteProblem, Family};
use crate::rational::RationalApproximant;
use crate::sparse::{
    axpy, dense_solve_spd, dot, norm2, sub, CsrMatrix, DenseMatrix, MassMatrix, ShiftedPair,
};

/// Residual tolerance of the high-fidelity per-shift solves.
pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 10_000;
/// Pole-count split of the two-preconditioner strategy: the smallest shifts
/// keep the base preconditioner, the rest get one built at the largest shift.
pub const TWO_PRECOND_SPLIT: usize = 10;
/// A direction is dropped during re-orthonormalization when the squared
/// energy norm of its component independent of the earlier directions falls
/// below this fraction of its own (unit) energy. Renormalizing a direction
/// with independent fraction σ² amplifies rounding by 1/σ, so this keeps the
/// orthonormality defect two orders of magnitude under its 1e-10 contract.
const DIRECTION_DROP_TOL: f64 = 1e-8;

/// A_d-orthonormal PCG directions with the projected operators cached.
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    directions: Vec<Vec<f64>>,
    a_hat: DenseMatrix,
    m_hat: DenseMatrix,
    f_hat: Vec<f64>,
    d: f64,
    defect: f64,
    requested_m: usize,
}

/// Solution of one shifted system in the reduced space.
#[derive(Clone, Debug)]
pub struct ShiftSolution {
    /// Galerkin coefficients y.
    pub reduced: Vec<f64>,
    /// Lifted solution P y.
    pub full: Vec<f64>,
    /// True when the dense solve fell back to a pseudo-inverse.
    pub fallback: bool,
}

impl ReducedBasis {
    pub fn m(&self) -> usize {
        self.directions.len()
    }

    pub fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// True when PCG stopped before delivering the requested direction count.
    pub fn truncated(&self) -> bool {
        self.m() < self.requested_m
    }

    /// Max deviation of Pᵀ(Ã+dM)P from the identity, recorded at build time.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Recomputes ‖Pᵀ(Ã+dM)P − I‖_max from scratch.
    pub fn orthonormality_defect(&self, a: &CsrMatrix, mass: &MassMatrix) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..self.m() {
            let adp = shifted_spmv(a, mass, self.d, &self.directions[j])?;
            for i in 0..self.m() {
                let entry = dot(&self.directions[i], &adp);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((entry - target).abs());
            }
        }
        Ok(worst)
    }

    /// Keeps the first m accepted directions. The orthonormalization is
    /// incremental, so as long as no direction was dropped this prefix is
    /// exactly the basis a shorter run would have produced.
    pub fn truncate(&self, m: usize) -> ReducedBasis {
        let m = m.min(self.m());
        let take = |src: &DenseMatrix| {
            let mut out = DenseMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] = src[(i, j)];
                }
            }
            out
        };
        ReducedBasis {
            directions: self.directions[..m].to_vec(),
            a_hat: take(&self.a_hat),
            m_hat: take(&self.m_hat),
            f_hat: self.f_hat[..m].to_vec(),
            d: self.d,
            defect: self.defect,
            requested_m: m,
        }
    }

    /// Dense Galerkin solve of (Â + t M̂)y = f̂, lifted back to full length.
    pub fn solve_shift(&self, t: f64) -> Result<ShiftSolution> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid("solve_shift: shift must be positive"));
        }
        let m = self.m();
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                g[(i, j)] = self.a_hat[(i, j)] + t * self.m_hat[(i, j)];
            }
        }
        let (y, fallback) = dense_solve_spd(&g, &self.f_hat)?;
        let mut full = vec![0.0; self.dim()];
        for (k, p) in self.directions.iter().enumerate() {
            axpy(y[k], p, &mut full);
        }
        Ok(ShiftSolution {
            reduced: y,
            full,
            fallback,
        })
    }
}

fn shifted_spmv(a: &CsrMatrix, mass: &MassMatrix, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = a.spmv(x)?;
    let mx = mass.apply(x)?;
    axpy(t, &mx, &mut out);
    Ok(out)
}

/// Runs m PCG steps on (Ã + dM)x = f and packages the energy-normalized
/// directions together with PᵀÃP, PᵀMP and Pᵀf.
pub fn build_reduced_basis(
    a_tilde: &CsrMatrix,
    mass: &MassMatrix,
    f: &[f64],
    d: f64,
    precond: &dyn Preconditioner,
    m: usize,
) -> Result<ReducedBasis> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::invalid("reduced basis: d must be finite and >= 0"));
    }
    if m == 0 {
        return Err(Error::invalid("reduced basis: m must be at least 1"));
    }
    let op = ShiftedPair::new(a_tilde, mass, d);
    let run = pcg(&op, f, precond, m, None)?;
    if run.termination == Termination::Breakdown {
        // Breakdown at (numerical) convergence just truncates the basis;
        // anything else is a genuine failure.
        let last = run.residual_norms.last().copied().unwrap_or(f64::INFINITY);
        let near_converged = last <= 1e-10 * norm2(f);
        if run.directions.is_empty() || !near_converged {
            return Err(Error::Breakdown(format!(
                "PCG broke down while building the reduced basis: {}",
                run.breakdown.as_deref().unwrap_or("unknown")
            )));
        }
    }
    if run.directions.is_empty() {
        return Err(Error::Numeric(
            "reduced basis: no usable PCG directions (zero load?)".into(),
        ));
    }

    // Energy-normalized candidates, then two passes of modified Gram–Schmidt
    // in the A_d inner product. The Ã- and M-images of each vector are
    // carried through the updates so every inner product is a plain dot.
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(run.directions.len());
    let mut a_images: Vec<Vec<f64>> = Vec::with_capacity(run.directions.len());
    let mut m_images: Vec<Vec<f64>> = Vec::with_capacity(run.directions.len());
    for (p, &l) in run.directions.iter().zip(&run.energies) {
        if !(l > 0.0) || !l.is_finite() {
            break;
        }
        let scale = 1.0 / l.sqrt();
        let mut v: Vec<f64> = p.iter().map(|x| scale * x).collect();
        let mut va = a_tilde.spmv(&v)?;
        let mut vm = mass.apply(&v)?;
        let mut energy = 1.0;
        for pass in 0..2 {
            for i in 0..directions.len() {
                let c = dot(&a_images[i], &v) + d * dot(&m_images[i], &v);
                axpy(-c, &directions[i], &mut v);
                axpy(-c, &a_images[i], &mut va);
                axpy(-c, &m_images[i], &mut vm);
            }
            energy = dot(&v, &va) + d * dot(&v, &vm);
            if pass == 0 && !(energy > DIRECTION_DROP_TOL) {
                break;
            }
        }
        if !(energy > DIRECTION_DROP_TOL) {
            // Nearly dependent on the accepted directions: nothing left of it
            // but rounding noise, which would poison the Galerkin blocks.
            continue;
        }
        // The carried images drift by a few ulps per update, which the
        // renormalization would amplify; recompute them from the final vector.
        va = a_tilde.spmv(&v)?;
        vm = mass.apply(&v)?;
        energy = dot(&v, &va) + d * dot(&v, &vm);
        if !(energy > DIRECTION_DROP_TOL) {
            continue;
        }
        let scale = 1.0 / energy.sqrt();
        v.iter_mut().for_each(|x| *x *= scale);
        va.iter_mut().for_each(|x| *x *= scale);
        vm.iter_mut().for_each(|x| *x *= scale);
        directions.push(v);
        a_images.push(va);
        m_images.push(vm);
    }
    if directions.is_empty() {
        return Err(Error::Numeric(
            "reduced basis: every PCG direction was dropped as dependent".into(),
        ));
    }
    let mc = directions.len();

    let mut a_raw = DenseMatrix::zeros(mc, mc);
    let mut m_raw = DenseMatrix::zeros(mc, mc);
    let mut f_hat = vec![0.0; mc];
    for j in 0..mc {
        for i in 0..mc {
            a_raw[(i, j)] = dot(&directions[i], &a_images[j]);
            m_raw[(i, j)] = dot(&directions[i], &m_images[j]);
        }
        f_hat[j] = dot(&directions[j], f);
    }
    let mut defect: f64 = 0.0;
    for i in 0..mc {
        for j in 0..mc {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((a_raw[(i, j)] + d * m_raw[(i, j)] - target).abs());
        }
    }

    Ok(ReducedBasis {
        directions,
        a_hat: a_raw.symmetrized(),
        m_hat: m_raw.symmetrized(),
        f_hat,
        d,
        defect,
        requested_m: m,
    })
}

/// One basis-and-preconditioner assignment covering a subset of the poles.
#[derive(Clone, Debug)]
pub struct PlanPair {
    pub term_indices: Vec<usize>,
    pub precond: PrecondSpec,
    pub d: f64,
    pub m: usize,
}

#[derive(Clone, Debug)]
pub struct SolvePlan {
    pub pairs: Vec<PlanPair>,
}

impl SolvePlan {
    /// All poles share one basis.
    pub fn single(n_terms: usize, precond: PrecondSpec, d: f64, m: usize) -> SolvePlan {
        SolvePlan {
            pairs: vec![PlanPair {
                term_indices: (0..n_terms).collect(),
                precond,
                d,
                m,
            }],
        }
    }

    /// Family defaults: preconditioner, d and m as each assembler declares.
    pub fn default_for(problem: &DiscreteProblem, n_terms: usize) -> SolvePlan {
        SolvePlan::single(
            n_terms,
            problem.default_precond(),
            problem.default_d(),
            problem.default_m(),
        )
    }

    /// Two-preconditioner strategy: the smallest shifts keep a preconditioner
    /// built at `low_shift`, the rest one built at the largest pole.
    pub fn split_two_preconditioners(
        r: &RationalApproximant,
        kind: &PrecondKind,
        low_shift: f64,
        d: f64,
        m: usize,
    ) -> Result<SolvePlan> {
        let shifts = r.shifts();
        if shifts.is_empty() {
            return Err(Error::invalid("two-preconditioner plan: empty approximant"));
        }
        let mut order: Vec<usize> = (0..shifts.len()).collect();
        order.sort_by(|&a, &b| shifts[a].total_cmp(&shifts[b]));
        let t_max = shifts[*order.last().unwrap()];
        let low = PrecondSpec {
            kind: kind.clone(),
            shift: low_shift,
        };
        if shifts.len() <= TWO_PRECOND_SPLIT {
            return Ok(SolvePlan::single(shifts.len(), low, d, m));
        }
        let high = PrecondSpec {
            kind: kind.clone(),
            shift: t_max,
        };
        Ok(SolvePlan {
            pairs: vec![
                PlanPair {
                    term_indices: order[..TWO_PRECOND_SPLIT].to_vec(),
                    precond: low,
                    d,
                    m,
                },
                PlanPair {
                    term_indices: order[TWO_PRECOND_SPLIT..].to_vec(),
                    precond: high,
                    d,
                    m,
                },
            ],
        })
    }

    pub fn validate(&self, n_terms: usize) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::invalid("solve plan has no pairs"));
        }
        let mut seen = vec![false; n_terms];
        for pair in &self.pairs {
            pair.precond.validate()?;
            if pair.m == 0 {
                return Err(Error::invalid("solve plan: m must be at least 1"));
            }
            if !(pair.d >= 0.0) || !pair.d.is_finite() {
                return Err(Error::invalid("solve plan: d must be finite and >= 0"));
            }
            if pair.d == pair.precond.shift {
                return Err(Error::invalid(
                    "solve plan: sample shift d must differ from the preconditioner shift",
                ));
            }
            for &i in &pair.term_indices {
                if i >= n_terms {
                    return Err(Error::invalid(format!(
                        "solve plan references term {i} of a {n_terms}-term approximant"
                    )));
                }
                if seen[i] {
                    return Err(Error::invalid(format!(
                        "solve plan assigns term {i} twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(miss) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!(
                "solve plan leaves term {miss} unassigned"
            )));
        }
        Ok(())
    }
}

/// Per-pole outcome of a fractional solve.
#[derive(Clone, Debug)]
pub struct PerShift {
    pub index: usize,
    pub shift: f64,
    pub residue: f64,
    /// u_rbm(t_i), before residue weighting and Λ^{-s} scaling.
    pub solution: Vec<f64>,
    pub fallback: bool,
}

#[derive(Clone, Debug)]
pub struct BasisSummary {
    pub precond: PrecondSpec,
    pub d: f64,
    pub m: usize,
    pub truncated: bool,
    pub defect: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub basis_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct FractionalSolveReport {
    /// u_rbm = Λ^{-s} Σ c_i u_rbm(t_i).
    pub solution: Vec<f64>,
    pub per_shift: Vec<PerShift>,
    pub bases: Vec<BasisSummary>,
    pub lambda: f64,
    pub s: f64,
    pub timings: Timings,
}

pub fn solve_fractional(
    problem: &DiscreteProblem,
    r: &RationalApproximant,
    plan: &SolvePlan,
) -> Result<FractionalSolveReport> {
    let mut reports = solve_fractional_sweep(problem, r, plan, &[usize::MAX])?;
    Ok(reports.pop().expect("one report per requested m"))
}

/// Solves at several basis sizes while building each pair's basis only once;
/// the m-prefix of a PCG direction sequence is the m-step basis.
pub fn solve_fractional_sweep(
    problem: &DiscreteProblem,
    r: &RationalApproximant,
    plan: &SolvePlan,
    ms: &[usize],
) -> Result<Vec<FractionalSolveReport>> {
    problem.validate()?;
    r.validate()?;
    plan.validate(r.n_terms())?;
    if ms.is_empty() {
        return Err(Error::invalid("no basis sizes requested"));
    }

    let shifts = r.shifts();
    let residues = r.residues();
    let n_terms = r.n_terms();
    let scale = problem.lambda.powf(-r.s);

    let a_tilde = problem.a.scaled(1.0 / problem.lambda);
    let basis_start = Instant::now();
    let mut bases = Vec::with_capacity(plan.pairs.len());
    for pair in &plan.pairs {
        let precond = precond::build(&pair.precond, &a_tilde, &problem.mass, problem.structure)?;
        let basis = build_reduced_basis(
            &a_tilde,
            &problem.mass,
            &problem.rhs,
            pair.d,
            precond.as_ref(),
            pair.m,
        )?;
        bases.push(basis);
    }
    let basis_seconds = basis_start.elapsed().as_secs_f64();

    let mut reports = Vec::with_capacity(ms.len());
    for &m in ms {
        let solve_start = Instant::now();
        let mut per_shift: Vec<Option<PerShift>> = vec![None; n_terms];
        let mut summaries = Vec::with_capacity(plan.pairs.len());
        for (pair, basis) in plan.pairs.iter().zip(&bases) {
            let use_m = m.min(basis.m());
            let view = if use_m == basis.m() {
                basis.clone()
            } else {
                basis.truncate(use_m)
            };
            for &i in &pair.term_indices {
                let sol = view.solve_shift(shifts[i])?;
                per_shift[i] = Some(PerShift {
                    index: i,
                    shift: shifts[i],
                    residue: residues[i],
                    solution: sol.full,
                    fallback: sol.fallback,
                });
            }
            summaries.push(BasisSummary {
                precond: pair.precond.clone(),
                d: pair.d,
                m: use_m,
                truncated: basis.truncated(),
                defect: basis.defect(),
            });
        }
        let per_shift: Vec<PerShift> = per_shift
            .into_iter()
            .map(|p| p.expect("plan covers every term"))
            .collect();
        let mut solution = vec![0.0; problem.n()];
        for rec in &per_shift {
            axpy(rec.residue, &rec.solution, &mut solution);
        }
        for v in &mut solution {
            *v *= scale;
        }
        reports.push(FractionalSolveReport {
            solution,
            per_shift,
            bases: summaries,
            lambda: problem.lambda,
            s: r.s,
            timings: Timings {
                basis_seconds,
                solve_seconds: solve_start.elapsed().as_secs_f64(),
            },
        });
    }
    Ok(reports)
}

/// High-fidelity per-shift solve used as the error baseline.
#[derive(Clone, Debug)]
pub struct ReferenceShift {
    pub index: usize,
    pub shift: f64,
    pub residue: f64,
    pub solution: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub solution: Vec<f64>,
    pub per_shift: Vec<ReferenceShift>,
    pub seconds: f64,
}

/// Solves every shifted system by Jacobi-PCG to relative tolerance 1e-12 and
/// assembles u_h = Λ^{-s} Σ c_i u_h(t_i).
pub fn reference_solve(
    problem: &DiscreteProblem,
    r: &RationalApproximant,
) -> Result<ReferenceSolution> {
    problem.validate()?;
    r.validate()?;
    let start = Instant::now();
    let a_tilde = problem.a.scaled(1.0 / problem.lambda);
    let b_norm = norm2(&problem.rhs);
    let shifts = r.shifts();
    let residues = r.residues();

    let mut per_shift = Vec::with_capacity(shifts.len());
    let mut solution = vec![0.0; problem.n()];
    for (i, &t) in shifts.iter().enumerate() {
        let op = ShiftedPair::new(&a_tilde, &problem.mass, t);
        let jacobi = precond::JacobiPrecond::new(&a_tilde, &problem.mass, t)?;
        let run = pcg(
            &op,
            &problem.rhs,
            &jacobi,
            REFERENCE_MAX_ITERS,
            Some(REFERENCE_TOL),
        )?;
        let last = run.residual_norms.last().copied().unwrap_or(f64::INFINITY);
        let relative_residual = if b_norm > 0.0 { last / b_norm } else { 0.0 };
        per_shift.push(ReferenceShift {
            index: i,
            shift: t,
            residue: residues[i],
            solution: run.solution().to_vec(),
            converged: run.termination == Termination::TolReached,
            iterations: run.iterations(),
            relative_residual,
        });
    }
    for rec in &per_shift {
        axpy(rec.residue, &rec.solution, &mut solution);
    }
    let scale = problem.lambda.powf(-r.s);
    for v in &mut solution {
        *v *= scale;
    }
    Ok(ReferenceSolution {
        solution,
        per_shift,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ErrorRow {
    pub index: usize,
    pub shift: f64,
    pub residue: f64,
    pub abs: f64,
    pub rel: f64,
}

#[derive(Clone, Debug)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub total_abs: f64,
    pub total_rel: f64,
}

/// Per-shift and total distances between the high-fidelity and reduced-basis
/// solutions, in the problem norm. Sphere differences are shifted to zero
/// mean, matching the constraint that fixes that solution.
pub fn error_table(
    problem: &DiscreteProblem,
    reference: &ReferenceSolution,
    report: &FractionalSolveReport,
) -> Result<ErrorTable> {
    if reference.per_shift.len() != report.per_shift.len() {
        return Err(Error::dims("error table: shift lists differ in length"));
    }
    let is_sphere = matches!(problem.family, Family::Sphere { .. });
    let measure = |diff: Vec<f64>| -> Result<f64> {
        let diff = if is_sphere {
            problem.zero_mean_shift(&diff)?
        } else {
            diff
        };
        problem.norm.norm(&diff)
    };

    let mut rows = Vec::with_capacity(report.per_shift.len());
    for (hi, lo) in reference.per_shift.iter().zip(&report.per_shift) {
        if hi.shift != lo.shift {
            return Err(Error::invalid(
                "error table: reference and reduced solves used different shifts",
            ));
        }
        let abs = measure(sub(&hi.solution, &lo.solution))?;
        let base = measure(hi.solution.clone())?;
        let rel = if base > 0.0 { abs / base } else { f64::INFINITY };
        rows.push(ErrorRow {
            index: hi.index,
            shift: hi.shift,
            residue: hi.residue,
            abs,
            rel,
        });
    }
    let total_abs = measure(sub(&reference.solution, &report.solution))?;
    let base = measure(reference.solution.clone())?;
    let total_rel = if base > 0.0 {
        total_abs / base
    } else {
        f64::INFINITY
    };
    Ok(ErrorTable {
        rows,
        total_abs,
        total_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precond::IdentityPrecond;
    use crate::problems::custom_problem;
    use crate::rational::RationalTerm;

    fn tridiag(n: usize, diag: f64, off: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, diag));
            if i + 1 < n {
                t.push((i, i + 1, off));
                t.push((i + 1, i, off));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn test_load(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i + 1) as f64).sin() + 0.5).collect()
    }

    fn toy_approximant(shifts: &[f64]) -> RationalApproximant {
        RationalApproximant {
            s: 0.5,
            epsilon: 1e-8,
            terms: shifts
                .iter()
                .map(|&t| RationalTerm {
                    residue: 1.0 / (1.0 + t),
                    shift: t,
                })
                .collect(),
            max_error: None,
        }
    }

    #[test]
    fn basis_is_orthonormal_and_shaped() {
        let n = 16;
        let a = tridiag(n, 2.0, -0.9);
        let mass = MassMatrix::Identity;
        let f = test_load(n);
        let basis =
            build_reduced_basis(&a, &mass, &f, 1.0, &IdentityPrecond::new(n), 5).unwrap();
        assert_eq!(basis.m(), 5);
        assert_eq!(basis.dim(), n);
        assert!(!basis.truncated());
        assert!(basis.defect() <= 1e-12);
        assert!(basis.orthonormality_defect(&a, &mass).unwrap() <= 1e-12);
    }

    #[test]
    fn full_basis_reproduces_direct_solves() {
        let n = 8;
        let a = tridiag(n, 2.5, -1.0);
        let mass = MassMatrix::Identity;
        let f = test_load(n);
        let basis =
            build_reduced_basis(&a, &mass, &f, 1.0, &IdentityPrecond::new(n), n).unwrap();
        for t in [0.01, 1.0, 7.5] {
            let sol = basis.solve_shift(t).unwrap();
            let shifted = a.add_scaled_mass(&mass, t).unwrap();
            let (direct, _) = dense_solve_spd(&shifted.to_dense(), &f).unwrap();
            let rel = norm2(&sub(&sol.full, &direct)) / norm2(&direct);
            assert!(rel <= 1e-10, "t={t}: rel={rel:e}");
        }
    }

    #[test]
    fn early_convergence_truncates() {
        let n = 6;
        let a = tridiag(n, 3.0, -1.0);
        let mass = MassMatrix::Identity;
        let f = test_load(n);
        let basis =
            build_reduced_basis(&a, &mass, &f, 1.0, &IdentityPrecond::new(n), 25).unwrap();
        assert!(basis.truncated());
        assert!(basis.m() <= n);
        assert!(basis.defect() <= 1e-10);
        assert!(basis.solve_shift(1.0).is_ok());
    }

    #[test]
    fn truncation_matches_shorter_run() {
        let n = 20;
        let a = tridiag(n, 2.0, -0.7);
        let mass = MassMatrix::Identity;
        let f = test_load(n);
        let long =
            build_reduced_basis(&a, &mass, &f, 0.5, &IdentityPrecond::new(n), 8).unwrap();
        let short =
            build_reduced_basis(&a, &mass, &f, 0.5, &IdentityPrecond::new(n), 4).unwrap();
        let cut = long.truncate(4);
        for t in [0.1, 2.0] {
            let a_sol = cut.solve_shift(t).unwrap().full;
            let b_sol = short.solve_shift(t).unwrap().full;
            assert!(norm2(&sub(&a_sol, &b_sol)) <= 1e-12 * norm2(&b_sol));
        }
    }

    #[test]
    fn large_shifts_are_damped() {
        let n = 12;
        let a = tridiag(n, 2.0, -0.8);
        let mass = MassMatrix::Identity;
        let f = test_load(n);
        let basis =
            build_reduced_basis(&a, &mass, &f, 1.0, &IdentityPrecond::new(n), 6).unwrap();
        let u10 = norm2(&basis.solve_shift(10.0).unwrap().full);
        let u9 = norm2(&basis.solve_shift(1e9).unwrap().full);
        assert!(u9 < 1e-6 * u10);
    }

    #[test]
    fn solve_shift_rejects_bad_shift() {
        let n = 8;
        let a = tridiag(n, 2.0, -0.5);
        let f = test_load(n);
        let basis = build_reduced_basis(
            &a,
            &MassMatrix::Identity,
            &f,
            1.0,
            &IdentityPrecond::new(n),
            3,
        )
        .unwrap();
        assert!(basis.solve_shift(0.0).is_err());
        assert!(basis.solve_shift(-1.0).is_err());
    }

    #[test]
    fn plan_validation_catches_misuse() {
        let spec = PrecondSpec::identity();
        let good = SolvePlan::single(4, spec.clone(), 1.0, 3);
        assert!(good.validate(4).is_ok());

        let mut dupe = good.clone();
        dupe.pairs[0].term_indices[1] = 0;
        assert!(dupe.validate(4).is_err());

        let mut short = good.clone();
        short.pairs[0].term_indices.pop();
        assert!(short.validate(4).is_err());

        let mut zero_m = good.clone();
        zero_m.pairs[0].m = 0;
        assert!(zero_m.validate(4).is_err());

        let mut clash = SolvePlan::single(4, PrecondSpec::exact(1.0), 1.0, 3);
        assert!(clash.validate(4).is_err());
        clash.pairs[0].d = 2.0;
        assert!(clash.validate(4).is_ok());
    }

    #[test]
    fn two_preconditioner_split() {
        let shifts: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let r = toy_approximant(&shifts);
        let plan =
            SolvePlan::split_two_preconditioners(&r, &PrecondKind::Jacobi, 0.0, 1.0, 6).unwrap();
        assert_eq!(plan.pairs.len(), 2);
        assert!(plan.validate(20).is_ok());
        let small: Vec<f64> = plan.pairs[0].term_indices.iter().map(|&i| shifts[i]).collect();
        assert!(small.iter().all(|&t| t <= 10.0));
        assert_eq!(plan.pairs[0].term_indices.len(), 10);
        assert_eq!(plan.pairs[1].precond.shift, 20.0);

        let tiny = toy_approximant(&shifts[..5]);
        let plan =
            SolvePlan::split_two_preconditioners(&tiny, &PrecondKind::Jacobi, 0.0, 1.0, 6).unwrap();
        assert_eq!(plan.pairs.len(), 1);
    }

    #[test]
    fn single_term_equals_direct_solve() {
        let n = 16;
        let a = tridiag(n, 2.0, -0.6);
        let problem = custom_problem(a, None, test_load(n), 4.0).unwrap();
        let r = RationalApproximant {
            s: 0.5,
            epsilon: 1e-8,
            terms: vec![RationalTerm {
                residue: 1.0,
                shift: 1.0,
            }],
            max_error: None,
        };
        let plan = SolvePlan::single(1, PrecondSpec::identity(), 2.0, n);
        let report = solve_fractional(&problem, &r, &plan).unwrap();

        let a_tilde = problem.a.scaled(1.0 / problem.lambda);
        let shifted = a_tilde.add_scaled_mass(&problem.mass, 1.0).unwrap();
        let (mut direct, _) = dense_solve_spd(&shifted.to_dense(), &problem.rhs).unwrap();
        let scale = problem.lambda.powf(-0.5);
        for v in &mut direct {
            *v *= scale;
        }
        let rel = norm2(&sub(&report.solution, &direct)) / norm2(&direct);
        assert!(rel <= 1e-10, "rel={rel:e}");
    }

    #[test]
    fn full_basis_solve_is_linear_in_f() {
        let n = 10;
        let a = tridiag(n, 2.2, -0.9);
        let r = toy_approximant(&[0.05, 0.4, 2.0, 9.0]);
        let plan = SolvePlan::single(4, PrecondSpec::identity(), 1.0, n);

        let f1 = test_load(n);
        let f2: Vec<f64> = (0..n).map(|i| ((3 * i + 1) as f64).cos()).collect();
        let fsum: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a + b).collect();

        let solve = |f: Vec<f64>| {
            let problem = custom_problem(a.clone(), None, f, 5.0).unwrap();
            solve_fractional(&problem, &r, &plan).unwrap().solution
        };
        let u1 = solve(f1);
        let u2 = solve(f2);
        let usum = solve(fsum);
        let mut combined = u1;
        for (c, v) in combined.iter_mut().zip(&u2) {
            *c += v;
        }
        assert!(norm2(&sub(&usum, &combined)) <= 1e-10 * norm2(&combined));
    }

    #[test]
    fn reference_meets_residual_contract() {
        let n = 24;
        let a = tridiag(n, 2.0, -0.55);
        let problem = custom_problem(a, None, test_load(n), 4.0).unwrap();
        let r = toy_approximant(&[1e-4, 0.02, 0.9, 12.0]);
        let reference = reference_solve(&problem, &r).unwrap();
        assert_eq!(reference.per_shift.len(), 4);
        let a_tilde = problem.a.scaled(1.0 / problem.lambda);
        let f_norm = norm2(&problem.rhs);
        for rec in &reference.per_shift {
            assert!(rec.converged);
            let op = ShiftedPair::new(&a_tilde, &problem.mass, rec.shift);
            let residual = sub(&op.apply(&rec.solution).unwrap(), &problem.rhs);
            assert!(norm2(&residual) <= 1e-11 * f_norm);
        }
    }

    #[test]
    fn error_table_with_full_basis_is_tiny() {
        let n = 12;
        let a = tridiag(n, 2.4, -1.0);
        let problem = custom_problem(a, None, test_load(n), 5.0).unwrap();
        let r = toy_approximant(&[0.01, 0.3, 4.0]);
        let plan = SolvePlan::single(3, PrecondSpec::identity(), 1.0, n);
        let report = solve_fractional(&problem, &r, &plan).unwrap();
        let reference = reference_solve(&problem, &r).unwrap();
        let table = error_table(&problem, &reference, &report).unwrap();
        assert_eq!(table.rows.len(), 3);
        for row in &table.rows {
            assert!(row.abs <= 1e-9, "shift {}: {:e}", row.shift, row.abs);
        }
        assert!(table.total_abs <= 1e-9);
        assert!(table.total_rel <= 1e-9);
    }

    #[test]
    fn sweep_matches_individual_solves() {
        let n = 14;
        let a = tridiag(n, 2.0, -0.8);
        let problem = custom_problem(a, None, test_load(n), 4.0).unwrap();
        let r = toy_approximant(&[0.05, 0.7, 6.0]);
        let plan_m6 = SolvePlan::single(3, PrecondSpec::identity(), 1.0, 6);
        let sweep = solve_fractional_sweep(&problem, &r, &plan_m6, &[4, 6]).unwrap();
        assert_eq!(sweep.len(), 2);
        let plan_m4 = SolvePlan::single(3, PrecondSpec::identity(), 1.0, 4);
        let direct = solve_fractional(&problem, &r, &plan_m4).unwrap();
        let rel = norm2(&sub(&sweep[0].solution, &direct.solution)) / norm2(&direct.solution);
        assert!(rel <= 1e-12);
        assert_eq!(sweep[0].bases[0].m, 4);
        assert_eq!(sweep[1].bases[0].m, 6);
    }
}
