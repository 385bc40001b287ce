use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ValidationError;

/// Partition `0..n` into `k` folds: seeded uniform shuffle, then round-robin
/// assignment. Fold sizes differ by at most one; indices within a fold are
/// sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ValidationError> {
    if k < 2 {
        return Err(ValidationError::InvalidK(k));
    }
    if n < k {
        return Err(ValidationError::TooFewRecords { need: k, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut folds: Vec<Vec<usize>> = (0..k).map(|_| Vec::with_capacity(n / k + 1)).collect();
    for (position, index) in order.into_iter().enumerate() {
        folds[position % k].push(index);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}
