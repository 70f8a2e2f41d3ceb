//! Seeded, nested training-set subsampling.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The learning-curve ladder.
pub const STANDARD_FRACTIONS: [f64; 6] = [0.01, 0.05, 0.10, 0.25, 0.50, 1.00];

pub fn is_standard_fraction(p: f64) -> bool {
    STANDARD_FRACTIONS.iter().any(|s| (s - p).abs() < 1e-12)
}

/// max(1, round(p·n)).
pub fn sample_size(n: usize, p: f64) -> usize {
    ((p * n as f64).round() as usize).clamp(1, n)
}

/// Indices of a uniform sample without replacement, returned in original order.
///
/// A single seeded permutation is cut at the requested size, so for a fixed
/// seed the sample at a smaller fraction is a subset of the sample at any
/// larger one. `p = 1` returns every index.
pub fn sample_indices(n: usize, p: f64, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Domain("cannot subsample an empty dataset".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("fraction {p} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut picked = order[..sample_size(n, p)].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Subsample of `items` at fraction `p`; see [`sample_indices`].
pub fn sample_fraction<T: Clone>(items: &[T], p: f64, seed: u64) -> Result<Vec<T>> {
    Ok(sample_indices(items.len(), p, seed)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
