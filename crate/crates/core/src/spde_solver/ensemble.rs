use super::replicate_seed;
use crate::error::Result;
use rayon::prelude::*;

/// Runs `f(r, seed_r)` for replicates r = 0..n_rep in parallel and returns the
/// results in replicate order; seed_r = replicate_seed(seed_base, r).
pub fn run_ensemble<T: Send>(
    n_rep: usize,
    seed_base: u64,
    f: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..n_rep)
        .into_par_iter()
        .map(|r| f(r, replicate_seed(seed_base, r as u64)))
        .collect()
}
