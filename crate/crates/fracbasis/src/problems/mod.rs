//! Built-in experiment families.
//!
//! Each assembler returns a [`DiscreteProblem`]: the operator pencil (A, M),
//! a load vector, a spectral upper bound Λ for the generalized eigenvalues of
//! (A, M), the norm in which errors are reported, and — where one is known —
//! the exact solution sampled at the degrees of freedom.
//!
//! Three families are provided:
//! * a finite-difference fractional Laplacian on the unit cube,
//! * a P1 surface FEM Laplace–Beltrami operator on the unit sphere,
//! * a random weighted graph Laplacian.

mod cube;
mod graph;
mod sphere;

pub use cube::{cube_fd, fd_eigenvalue};
pub use graph::graph_random;
pub use sphere::{build_sphere_mesh, sphere_fem, SurfaceMesh};

use crate::error::{Error, Result};
use crate::precond::{CycleKind, PrecondSpec, ProblemStructure};
use crate::sparse::{norm2, sub, CsrMatrix, MassMatrix, NormDescriptor};

/// Which assembler produced the problem, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cube { level: usize, intervals: usize },
    Sphere { level: usize },
    Graph { n: usize, seed: u64 },
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cube { .. } => "cube",
            Family::Sphere { .. } => "sphere",
            Family::Graph { .. } => "graph",
            Family::Custom => "custom",
        }
    }
}

/// A fully assembled instance of A^{-s} f ≈ u.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    pub family: Family,
    pub a: CsrMatrix,
    pub mass: MassMatrix,
    pub rhs: Vec<f64>,
    /// Upper bound for the largest generalized eigenvalue of (A, M).
    pub lambda: f64,
    pub norm: NormDescriptor,
    pub structure: ProblemStructure,
    /// Continuous solution sampled at the degrees of freedom.
    pub exact: Option<Vec<f64>>,
    /// Closed-form solution of the *discrete* fractional problem (cube only).
    pub discrete_exact: Option<Vec<f64>>,
}

/// Norm distances from a computed solution to the known solutions.
#[derive(Clone, Copy, Debug)]
pub struct DiscretizationError {
    pub vs_exact: f64,
    pub vs_exact_rel: f64,
    /// Distance to the closed-form discrete solution, when one exists.
    pub vs_discrete: Option<f64>,
}

impl DiscreteProblem {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.nrows() != self.a.ncols() {
            return Err(Error::dims("problem: A must be square"));
        }
        if self.rhs.len() != self.a.n() {
            return Err(Error::dims("problem: load vector length mismatch"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("problem: Λ must be positive and finite"));
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("problem: non-finite load vector"));
        }
        Ok(())
    }

    /// Sample-shift d used when no override is given.
    pub fn default_d(&self) -> f64 {
        match self.family {
            Family::Sphere { .. } => 2.0,
            _ => 1.0,
        }
    }

    /// Preconditioner shift s used when no override is given. The sphere
    /// stiffness has the constants in its kernel, so s = 0 is not usable
    /// there.
    pub fn default_precond_shift(&self) -> f64 {
        match self.family {
            Family::Sphere { .. } => 1.0,
            _ => 0.0,
        }
    }

    pub fn default_m(&self) -> usize {
        match self.family {
            Family::Graph { .. } => 8,
            _ => 10,
        }
    }

    pub fn default_precond(&self) -> PrecondSpec {
        let shift = self.default_precond_shift();
        match self.family {
            Family::Cube { .. } => PrecondSpec::geometric_mg(shift),
            Family::Sphere { .. } => PrecondSpec::aggregation_aml(shift, CycleKind::W),
            Family::Graph { .. } => PrecondSpec::exact(shift),
            Family::Custom => PrecondSpec::jacobi(shift),
        }
    }

    /// Removes the M-weighted mean: u - (1ᵀMu / 1ᵀM1)·1. Only meaningful for
    /// the sphere family, whose solution is fixed by the zero-mean constraint.
    pub fn zero_mean_shift(&self, u: &[f64]) -> Result<Vec<f64>> {
        if !matches!(self.family, Family::Sphere { .. }) {
            return Err(Error::Unsupported(
                "zero-mean shift only applies to the sphere family".into(),
            ));
        }
        if u.len() != self.n() {
            return Err(Error::dims("zero-mean shift: vector length mismatch"));
        }
        let mu = self.mass.apply(u)?;
        let num: f64 = mu.iter().sum();
        let ones = vec![1.0; self.n()];
        let mones = self.mass.apply(&ones)?;
        let den: f64 = mones.iter().sum();
        if !(den > 0.0) {
            return Err(Error::Numeric("zero-mean shift: 1ᵀM1 not positive".into()));
        }
        let mean = num / den;
        Ok(u.iter().map(|v| v - mean).collect())
    }

    /// Problem-norm distance from `u` to the exact solution(s). Sphere
    /// differences are shifted to zero mean first, since the continuous
    /// solution is only determined up to a constant.
    pub fn discretization_error(&self, u: &[f64]) -> Result<DiscretizationError> {
        let exact = self.exact.as_ref().ok_or_else(|| {
            Error::Unsupported("no exact solution available for this problem".into())
        })?;
        if u.len() != self.n() {
            return Err(Error::dims("discretization error: vector length mismatch"));
        }
        let mut diff = sub(u, exact);
        if matches!(self.family, Family::Sphere { .. }) {
            diff = self.zero_mean_shift(&diff)?;
        }
        let vs_exact = self.norm.norm(&diff)?;
        let exact_norm = self.norm.norm(exact)?;
        let vs_exact_rel = if exact_norm > 0.0 {
            vs_exact / exact_norm
        } else {
            f64::INFINITY
        };
        let vs_discrete = match &self.discrete_exact {
            Some(star) => Some(self.norm.norm(&sub(u, star))?),
            None => None,
        };
        Ok(DiscretizationError {
            vs_exact,
            vs_exact_rel,
            vs_discrete,
        })
    }
}

/// Wraps externally supplied matrices (Matrix Market / plain text) into a
/// problem instance. The caller must supply the spectral bound Λ.
pub fn custom_problem(
    a: CsrMatrix,
    mass: Option<CsrMatrix>,
    rhs: Vec<f64>,
    lambda: f64,
) -> Result<DiscreteProblem> {
    if !a.is_symmetric(1e-10) {
        return Err(Error::invalid("custom problem: A must be symmetric"));
    }
    let mass = match mass {
        Some(m) => {
            if m.n() != a.n() {
                return Err(Error::dims("custom problem: mass dimension mismatch"));
            }
            MassMatrix::Matrix(m)
        }
        None => MassMatrix::Identity,
    };
    let problem = DiscreteProblem {
        family: Family::Custom,
        a,
        mass,
        rhs,
        lambda,
        norm: NormDescriptor::Euclidean,
        structure: ProblemStructure::Unstructured,
        exact: None,
        discrete_exact: None,
    };
    problem.validate()?;
    Ok(problem)
}

/// Euclidean distance between `x` and `y`, relative to ‖y‖.
pub fn relative_diff(x: &[f64], y: &[f64]) -> f64 {
    let denom = norm2(y);
    if denom == 0.0 {
        return norm2(x);
    }
    norm2(&sub(x, y)) / denom
}
