//! Fractional powers of sparse SPD operator pencils.
//!
//! The solver computes u ~ A^{-s} f in two stages: a greedy rational fit
//! r(z) = sum_i c_i/(z + t_i) ~ z^{-s} on a spectral interval, followed by a
//! reduced-basis solve that handles every shifted system (A + t_i M) u_i = f
//! in one small subspace built from preconditioned conjugate-gradient
//! directions.

pub mod cli;
pub mod error;
pub mod pcg;
pub mod precond;
pub mod problems;
pub mod rational;
pub mod rcgbm;
pub mod report;
pub mod sparse;

pub use error::{Error, Result};
