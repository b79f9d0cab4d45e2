//! Random weighted graph Laplacian, A = L + I/n.
//!
//! Undirected edges are drawn so that every unordered vertex pair is present
//! independently with probability avg_degree/n, weights uniform in (0,1).
//! Instead of testing all n(n-1)/2 pairs, the generator jumps between
//! accepted pairs with geometrically distributed skips, which reproduces the
//! same Bernoulli process in O(edges) draws. Everything — including the
//! standard-normal load vector drawn afterwards — comes from one seeded
//! ChaCha20 stream, so a seed pins the instance exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{DiscreteProblem, Family};
use crate::error::{Error, Result};
use crate::precond::ProblemStructure;
use crate::sparse::{CsrMatrix, MassMatrix, NormDescriptor};

pub const MIN_VERTICES: usize = 16;

/// Pairs (i,j) with i < j, row-major: offset(i) counts pairs in rows < i.
fn pair_offset(i: u64, n: u64) -> u64 {
    i * (n - 1) - i * (i.saturating_sub(1)) / 2
}

fn unrank_pair(q: u64, n: u64) -> (usize, usize) {
    // Solve offset(i) <= q < offset(i+1); the float root is then fixed up.
    let nf = n as f64;
    let qf = q as f64;
    let disc = ((2.0 * nf - 1.0) * (2.0 * nf - 1.0) - 8.0 * qf).max(0.0);
    let guess = ((2.0 * nf - 1.0 - disc.sqrt()) / 2.0).floor();
    let mut i = if guess < 0.0 { 0 } else { guess as u64 };
    i = i.min(n - 2);
    while pair_offset(i + 1, n) <= q {
        i += 1;
    }
    while pair_offset(i, n) > q {
        i -= 1;
    }
    let j = i + 1 + (q - pair_offset(i, n));
    (i as usize, j as usize)
}

pub fn graph_random(n: usize, avg_degree: f64, seed: u64) -> Result<DiscreteProblem> {
    if n < MIN_VERTICES {
        return Err(Error::invalid(format!(
            "graph needs at least {MIN_VERTICES} vertices, got {n}"
        )));
    }
    if !(avg_degree > 0.0) || avg_degree >= n as f64 {
        return Err(Error::invalid("graph average degree must lie in (0, n)"));
    }

    let p = avg_degree / n as f64;
    let ln_keep = (1.0 - p).ln();
    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut cursor: u64 = 0;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
        let skip = (u.ln() / ln_keep).floor();
        if !skip.is_finite() || skip as u64 >= total_pairs - cursor {
            break;
        }
        cursor += skip as u64;
        let (i, j) = unrank_pair(cursor, n as u64);
        let w: f64 = rng.random();
        triplets.push((i, j, -w));
        triplets.push((j, i, -w));
        triplets.push((i, i, w));
        triplets.push((j, j, w));
        cursor += 1;
        if cursor >= total_pairs {
            break;
        }
    }
    let shift = 1.0 / n as f64;
    for i in 0..n {
        triplets.push((i, i, shift));
    }
    let a = CsrMatrix::from_triplets(n, n, &triplets)?;

    let rhs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    Ok(DiscreteProblem {
        family: Family::Graph { n, seed },
        lambda: a.infinity_norm(),
        a,
        mass: MassMatrix::Identity,
        rhs,
        norm: NormDescriptor::Euclidean,
        structure: ProblemStructure::Unstructured,
        exact: None,
        discrete_exact: None,
    })
}
