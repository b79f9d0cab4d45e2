//! Sum-of-poles rational approximation of z^{-s} on [eps, 1].
//!
//! r_n(z) = sum_i c_i / (z + t_i) with positive shifts t_i. Approximants are
//! produced by an orthogonal greedy fit over a fixed pole dictionary (see
//! [`oga`]) and consumed by the reduced-basis solver, which turns each term
//! into one shifted linear system.

mod dictionary;
mod grid;
mod oga;

pub use dictionary::{build_dictionary, normalization, Dictionary, DEFAULT_CAP, DEFAULT_SPACING};
pub use grid::{build_grid, gauss_offsets, QuadratureGrid, GAUSS_WEIGHTS};
pub use oga::{oga_fit, oga_fit_observed, oga_fit_with_trace, FitStep, FitTrace, OgaConfig};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One pole/residue pair. Serialized field names follow the published
/// tables: `c` for the residue, `t` for the (negated) pole.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RationalTerm {
    #[serde(rename = "c")]
    pub residue: f64,
    #[serde(rename = "t")]
    pub shift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalApproximant {
    /// Fractional power being approximated: r(z) ~ z^{-s}.
    pub s: f64,
    /// Left endpoint of the fitting interval [epsilon, 1].
    pub epsilon: f64,
    /// Terms in greedy selection order.
    pub terms: Vec<RationalTerm>,
    /// Sup-norm validation error recorded when the approximant was fitted,
    /// if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
}

pub const VALIDATION_LO: f64 = 1e-6;
pub const VALIDATION_HI: f64 = 1.0;
pub const VALIDATION_POINTS: usize = 5_000_000;

impl RationalApproximant {
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.shift).collect()
    }

    pub fn residues(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.residue).collect()
    }

    /// Evaluates r(z) for z > 0.
    pub fn evaluate(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::invalid(format!(
                "rational approximant evaluated at z = {z:e}; need z > 0"
            )));
        }
        Ok(self.evaluate_unchecked(z))
    }

    fn evaluate_unchecked(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for term in &self.terms {
            acc += term.residue / (z + term.shift);
        }
        acc
    }

    /// Max of |r(z) - z^{-s}| over n uniformly spaced points on [lo, hi].
    pub fn max_error(&self, lo: f64, hi: f64, n: usize) -> Result<f64> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(Error::invalid(
                "max_error needs 0 < lo < hi and at least two sample points",
            ));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let s = self.s;
        let mut worst = 0.0f64;
        for k in 0..n {
            let z = if k == n - 1 {
                hi
            } else {
                lo + k as f64 * step
            };
            let err = (self.evaluate_unchecked(z) - z.powf(-s)).abs();
            if err > worst {
                worst = err;
            }
        }
        Ok(worst)
    }

    /// Validation error on the standard grid: 5,000,000 points on [1e-6, 1].
    pub fn max_error_default(&self) -> Result<f64> {
        self.max_error(VALIDATION_LO, VALIDATION_HI, VALIDATION_POINTS)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("serialize approximant: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let out: RationalApproximant = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::invalid("approximant has no terms"));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::invalid(format!(
                "fractional power s = {} outside (0,1)",
                self.s
            )));
        }
        for term in &self.terms {
            if !(term.shift > 0.0) || !term.residue.is_finite() {
                return Err(Error::invalid(
                    "approximant terms must have positive shifts and finite residues",
                ));
            }
        }
        let mut shifts = self.shifts();
        shifts.sort_by(f64::total_cmp);
        if shifts.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("approximant has duplicate shifts"));
        }
        Ok(())
    }
}
