//! Per-epoch interleaving of training instances across tasks.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds::derive;

/// A shuffled list of `(task, instance)` pairs covering every training
/// instance of every task exactly once.
pub fn schedule_epoch(task_sizes: &[usize], seed: u64, epoch: usize) -> Result<Vec<(usize, usize)>> {
    if task_sizes.iter().all(|&n| n == 0) {
        return Err(Error::Domain("no training instances to schedule".into()));
    }
    let mut order: Vec<(usize, usize)> = task_sizes
        .iter()
        .enumerate()
        .flat_map(|(t, &n)| (0..n).map(move |i| (t, i)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &format!("epoch{epoch}")));
    order.shuffle(&mut rng);
    Ok(order)
}
