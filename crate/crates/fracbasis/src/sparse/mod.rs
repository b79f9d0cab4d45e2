//! Sparse and small dense linear algebra shared by every solver stage.

mod csr;
mod dense;
pub mod market;
mod norms;

pub use csr::{axpy, dot, norm2, shifted_apply, sub, CsrMatrix, MassMatrix, ShiftedPair};
pub use dense::{dense_solve_spd, solve_min_norm, DenseMatrix};
pub use norms::NormDescriptor;
