//! Norms used to measure discrete errors. Each problem family reports errors
//! in its natural norm: plain Euclidean for graphs, mesh-scaled Euclidean for
//! finite differences, and mass- or operator-weighted norms for finite
//! elements.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum NormDescriptor {
    Euclidean,
    /// factor * ||v||_2, e.g. h^{3/2} for a uniform 3D grid.
    ScaledEuclidean { factor: f64 },
    /// sqrt(v^T M v) with SPD M.
    MassWeighted { m: Arc<CsrMatrix> },
    /// sqrt(v^T A v) with SPD A (energy norm).
    OperatorWeighted { a: Arc<CsrMatrix> },
}

impl NormDescriptor {
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        match self {
            NormDescriptor::Euclidean => Ok(two_norm(v)),
            NormDescriptor::ScaledEuclidean { factor } => Ok(factor * two_norm(v)),
            NormDescriptor::MassWeighted { m } => weighted_norm(m, v),
            NormDescriptor::OperatorWeighted { a } => weighted_norm(a, v),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormDescriptor::Euclidean => "euclidean",
            NormDescriptor::ScaledEuclidean { .. } => "scaled-euclidean",
            NormDescriptor::MassWeighted { .. } => "mass-weighted",
            NormDescriptor::OperatorWeighted { .. } => "operator-weighted",
        }
    }
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn weighted_norm(w: &CsrMatrix, v: &[f64]) -> Result<f64> {
    let wv = w.spmv(v)?;
    let q: f64 = v.iter().zip(&wv).map(|(a, b)| a * b).sum();
    if q < -1e-12 * two_norm(v).powi(2) {
        return Err(Error::Numeric(format!(
            "weighted norm produced negative quadratic form {q:e}"
        )));
    }
    Ok(q.max(0.0).sqrt())
}
