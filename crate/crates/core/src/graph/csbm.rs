//! Contextual stochastic-block-model generator: a desk-scale homophilous
//! stand-in for citation graphs.
//!
//! Nodes get balanced classes; edges appear with probability `p_in` inside a
//! class and `p_out` across classes. Features are sparse and positive: each
//! node draws a handful of indices, biased toward a per-class block of the
//! feature space, with Gaussian values centered at `mu`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::{FeatureKind, GraphBundle, Split};
use crate::sparse::SparseRowMatrix;

#[derive(Debug, Clone)]
pub struct CsbmParams {
    pub n: usize,
    pub num_classes: usize,
    pub dim: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub mu: f64,
    pub seed: u64,
}

/// Probability that a drawn feature index lands in the node's class block.
/// Off-block draws are uniform noise, so class evidence stays diffuse enough
/// for injected features to matter.
const IN_BLOCK_PROB: f64 = 0.5;
/// Train/val fractions of the split (the rest is test).
const TRAIN_FRAC: f64 = 0.10;
const VAL_FRAC: f64 = 0.10;

impl CsbmParams {
    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("need at least 2 classes"));
        }
        if self.n < self.num_classes {
            return Err(Error::config(format!(
                "n={} smaller than class count {}",
                self.n, self.num_classes
            )));
        }
        if self.dim < self.num_classes {
            return Err(Error::config(format!(
                "dim={} smaller than class count {}",
                self.dim, self.num_classes
            )));
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return Err(Error::config("edge probabilities must lie in [0, 1]"));
        }
        if self.p_in <= self.p_out {
            return Err(Error::config(format!(
                "p_in={} must exceed p_out={} (no homophily otherwise)",
                self.p_in, self.p_out
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::config("mu must be positive"));
        }
        Ok(())
    }
}

/// Standard normal via Box-Muller.
fn normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gen_csbm(params: &CsbmParams) -> Result<GraphBundle> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let n = params.n;
    let classes = params.num_classes;

    let labels: Vec<usize> = (0..n).map(|v| v % classes).collect();

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] {
                params.p_in
            } else {
                params.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let block = params.dim / classes;
    let nnz_lo = (block / 3).max(2);
    let nnz_hi = (block * 2 / 3).max(nnz_lo + 1);
    let mut features = SparseRowMatrix::with_cols(params.dim);
    for v in 0..n {
        let c = labels[v];
        let nnz = rng.random_range(nnz_lo..=nnz_hi);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(nnz);
        let mut used = std::collections::HashSet::new();
        while row.len() < nnz && used.len() < params.dim {
            let (idx, center) = if rng.random::<f64>() < IN_BLOCK_PROB {
                (c * block + rng.random_range(0..block), params.mu)
            } else {
                (rng.random_range(0..params.dim), 0.5)
            };
            if !used.insert(idx) {
                continue;
            }
            let value = (center + 0.3 * normal(&mut rng)).abs().max(0.05);
            row.push((idx, value));
        }
        row.sort_unstable_by_key(|&(idx, _)| idx);
        features.push_row(&row)?;
    }

    // Shuffled 10/10/80 split.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((n as f64 * TRAIN_FRAC).round() as usize).max(1);
    let n_val = ((n as f64 * VAL_FRAC).round() as usize).max(1);
    let mut split = vec![Split::Test; n];
    for &v in order.iter().take(n_train) {
        split[v] = Split::Train;
    }
    for &v in order.iter().skip(n_train).take(n_val) {
        split[v] = Split::Val;
    }

    GraphBundle::from_edges(
        n,
        &edges,
        features,
        labels,
        split,
        Some(classes),
        FeatureKind::Continuous,
    )
}
