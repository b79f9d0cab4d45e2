//! Dictionary of candidate poles for the greedy fit.
//!
//! Candidates are t_j = (j * spacing)^2 for j = 1..floor(cap / spacing); the
//! squared spacing clusters candidates near zero where z^{-s} is hardest to
//! approximate. Each candidate function phi_t(z) = 1/(z+t) carries the
//! closed-form L2(eps,1) norm nu(t) = sqrt(1/(eps+t) - 1/(1+t)) used to
//! normalize greedy scores; the norm is analytic (not quadrature-based) so
//! that fitted residues match the published convention c = C/nu(t).

use crate::error::{Error, Result};

pub const DEFAULT_SPACING: f64 = 5e-5;
pub const DEFAULT_CAP: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct Dictionary {
    epsilon: f64,
    spacing: f64,
    shifts: Vec<f64>,
    normalizations: Vec<f64>,
}

pub fn normalization(epsilon: f64, t: f64) -> f64 {
    (1.0 / (epsilon + t) - 1.0 / (1.0 + t)).sqrt()
}

pub fn build_dictionary(epsilon: f64, spacing: f64, cap: f64) -> Result<Dictionary> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("dictionary epsilon must lie in (0,1)"));
    }
    if !(spacing > 0.0 && spacing <= cap) {
        return Err(Error::invalid(
            "dictionary spacing must be positive and no larger than the cap",
        ));
    }
    let count = (cap / spacing).floor() as usize;
    let mut shifts = Vec::with_capacity(count);
    let mut normalizations = Vec::with_capacity(count);
    for j in 1..=count {
        let t = (j as f64 * spacing) * (j as f64 * spacing);
        shifts.push(t);
        normalizations.push(normalization(epsilon, t));
    }
    Ok(Dictionary {
        epsilon,
        spacing,
        shifts,
        normalizations,
    })
}

impl Dictionary {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn normalizations(&self) -> &[f64] {
        &self.normalizations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dictionary_size_and_entries() {
        let d = build_dictionary(1e-8, DEFAULT_SPACING, DEFAULT_CAP).unwrap();
        assert_eq!(d.len(), 100_000);
        // First candidate is spacing^2; the largest is (cap rounded to the
        // grid)^2 = 25.
        assert_eq!(d.shifts()[0], DEFAULT_SPACING * DEFAULT_SPACING);
        assert_eq!(*d.shifts().last().unwrap(), 25.0);
        // Entry j=85 is the first pole the reference fit selects; its value
        // agrees with the tabulated 1.80625e-5 to floating-point accuracy.
        let t85 = d.shifts()[84];
        assert!(((t85 - 1.80625e-5) / 1.80625e-5).abs() < 1e-12);
    }

    #[test]
    fn normalization_closed_form() {
        // nu(25) with eps=1e-8: sqrt(1/(25+1e-8) - 1/26).
        let nu = normalization(1e-8, 25.0);
        assert!(((nu - 3.9223226824e-2) / 3.9223226824e-2).abs() < 1e-10);
    }

    #[test]
    fn monotone_shift_sequence() {
        let d = build_dictionary(1e-6, 1e-2, 1.0).unwrap();
        assert_eq!(d.len(), 100);
        for w in d.shifts().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn validates_inputs() {
        assert!(build_dictionary(0.0, 1e-2, 1.0).is_err());
        assert!(build_dictionary(1e-8, 0.0, 1.0).is_err());
        assert!(build_dictionary(1e-8, 2.0, 1.0).is_err());
    }
}
