use rand::Rng;

use crate::graph::Adjacency;
use crate::{Error, Result};

/// Rejection draws before falling back to enumerating the complement.
pub const REJECTION_ATTEMPTS: usize = 64;

/// One item drawn uniformly from `0..n_items` minus `positives[user]`.
///
/// Rejection sampling first; users with dense rows fall back to an explicit
/// complement, which keeps the draw uniform.
pub fn sample_negative<R: Rng>(
    user: u32,
    positives: &Adjacency,
    n_items: usize,
    rng: &mut R,
) -> Result<u32> {
    let seen = positives.neighbors(user);
    if seen.len() < n_items {
        for _ in 0..REJECTION_ATTEMPTS {
            let c = rng.random_range(0..n_items as u32);
            if seen.binary_search(&c).is_err() {
                return Ok(c);
            }
        }
    }
    let complement: Vec<u32> = (0..n_items as u32)
        .filter(|c| seen.binary_search(c).is_err())
        .collect();
    if complement.is_empty() {
        return Err(Error::SamplingExhausted {
            user,
            attempts: REJECTION_ATTEMPTS,
        });
    }
    Ok(complement[rng.random_range(0..complement.len())])
}

/// `k` negatives per positive pair, flattened pair-major.
pub fn sample_negatives<R: Rng>(
    pairs: &[(u32, u32)],
    positives: &Adjacency,
    n_items: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(pairs.len() * k);
    for &(user, _) in pairs {
        for _ in 0..k {
            out.push(sample_negative(user, positives, n_items, rng)?);
        }
    }
    Ok(out)
}
