//! Per-fake-node edge budgets drawn from the empirical degree distribution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::GraphBundle;

/// Total new-edge allowance: `floor(n_fake * avg_degree)`.
pub fn total_edge_budget(g: &GraphBundle, n_fake: usize) -> usize {
    n_fake * 2 * g.m() / g.n()
}

/// Draw one budget per fake node by sampling node degrees with replacement
/// (clamped to >= 1), then nudge entries by single units until the list sums
/// to the exact total.
pub fn sample_budgets(g: &GraphBundle, n_fake: usize, seed: u64) -> Result<Vec<usize>> {
    if n_fake == 0 {
        return Ok(Vec::new());
    }
    let total = total_edge_budget(g, n_fake);
    if total < n_fake {
        return Err(Error::config(format!(
            "edge budget {total} cannot give each of {n_fake} fake nodes one edge"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut budgets: Vec<usize> = (0..n_fake)
        .map(|_| g.degree(rng.random_range(0..g.n())).max(1))
        .collect();
    let mut sum: usize = budgets.iter().sum();
    while sum > total {
        let i = rng.random_range(0..n_fake);
        if budgets[i] > 1 {
            budgets[i] -= 1;
            sum -= 1;
        }
    }
    while sum < total {
        let i = rng.random_range(0..n_fake);
        budgets[i] += 1;
        sum += 1;
    }
    Ok(budgets)
}
