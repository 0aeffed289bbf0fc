//! Greedy victim-cluster derivation.
//!
//! A cluster starts at the unconsumed candidate with the best selection
//! score. Each growth step scores every unconsumed candidate of the same
//! target-label group by the margin of the target label in the aggregated
//! smoothed distribution, retains the top `n_k`, and adds the retained node
//! with the best selection score. Selected nodes leave the global pool, so
//! clusters are disjoint across fake nodes.

use std::collections::BTreeMap;

use crate::propagation::ProbMatrix;

/// Aggregated smoothed distribution of a prospective fake node of degree
/// `d_u` wired to `cluster`:
/// `(1 / sqrt(d_u)) * sum_{i in cluster} z_i / sqrt(d_i + 1)`.
///
/// Rows need not sum to 1.
pub fn aggregated_dist(
    cluster: &[usize],
    z: &ProbMatrix,
    degrees: &[usize],
    d_u: usize,
) -> Vec<f64> {
    assert!(!cluster.is_empty(), "empty cluster");
    assert!(d_u >= cluster.len(), "fake degree below cluster size");
    let classes = z.classes();
    let mut acc = vec![0.0; classes];
    for &i in cluster {
        let w = 1.0 / ((degrees[i] + 1) as f64).sqrt();
        for (a, &x) in acc.iter_mut().zip(z.row(i)) {
            *a += w * x;
        }
    }
    let scale = 1.0 / (d_u as f64).sqrt();
    for a in &mut acc {
        *a *= scale;
    }
    acc
}

/// Margin of the pseudo label in an aggregated distribution:
/// `agg[c_u] - max_{c != c_u} agg[c]`.
pub fn cluster_score(agg: &[f64], c_u: usize) -> f64 {
    let mut other = f64::NEG_INFINITY;
    for (c, &x) in agg.iter().enumerate() {
        if c != c_u && x > other {
            other = x;
        }
    }
    agg[c_u] - other
}

/// Read-only inputs of the greedy loop.
pub struct ClusterContext<'a> {
    /// Smoothed distributions, one row per (current-graph) node.
    pub z_tilde: &'a ProbMatrix,
    /// Original degrees of candidate nodes.
    pub degrees: &'a [usize],
    /// Target label per node.
    pub target: &'a [usize],
    /// Selection score per node (the propagation score, or a baseline
    /// substitute).
    pub score: &'a [f64],
}

/// Unconsumed candidate pool shared by all fake nodes of one attack.
pub struct SelectionPool {
    /// Candidate ids by (selection score desc, id asc).
    order: Vec<usize>,
    groups: BTreeMap<usize, Vec<usize>>,
    consumed: Vec<bool>,
    remaining: usize,
}

impl SelectionPool {
    /// `candidates` must already be ordered by (score desc, id asc).
    pub fn new(n: usize, candidates: Vec<usize>, target: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in &candidates {
            groups.entry(target[v]).or_default().push(v);
        }
        let remaining = candidates.len();
        Self {
            order: candidates,
            groups,
            consumed: vec![false; n],
            remaining,
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn is_consumed(&self, v: usize) -> bool {
        self.consumed[v]
    }

    pub fn consume(&mut self, v: usize) {
        debug_assert!(!self.consumed[v]);
        self.consumed[v] = true;
        self.remaining -= 1;
    }

    /// Best-ranked unconsumed candidate, if any.
    pub fn first_unconsumed(&self) -> Option<usize> {
        self.order.iter().copied().find(|&v| !self.consumed[v])
    }

    /// Unconsumed members of a target-label group, in rank order.
    pub fn group_unconsumed(&self, label: usize) -> Vec<usize> {
        self.groups
            .get(&label)
            .map(|members| {
                members
                    .iter()
                    .copied()
                    .filter(|&v| !self.consumed[v])
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedCluster {
    pub pseudo_label: usize,
    /// Victims in selection order; the seed comes first.
    pub victims: Vec<usize>,
}

/// Run the greedy loop for one fake node of edge budget `budget`. Returns
/// `None` when the pool is exhausted before a seed can be picked. The
/// cluster may come up short of `budget` if its group empties.
pub fn derive_cluster(
    ctx: &ClusterContext<'_>,
    pool: &mut SelectionPool,
    budget: usize,
    n_k: usize,
) -> Option<DerivedCluster> {
    assert!(budget >= 1, "budget must be at least 1");
    assert!(n_k >= 1, "n_k must be at least 1");
    let seed = pool.first_unconsumed()?;
    pool.consume(seed);
    let c_u = ctx.target[seed];
    let mut victims = vec![seed];
    // Running sum of z_i / sqrt(d_i + 1) over the cluster; d_u is the full
    // budget throughout, a constant positive scale that never reorders
    // candidates.
    let classes = ctx.z_tilde.classes();
    let mut agg_sum = vec![0.0; classes];
    add_weighted_row(&mut agg_sum, ctx, seed);

    while victims.len() < budget {
        let candidates = pool.group_unconsumed(c_u);
        if candidates.is_empty() {
            break;
        }
        let scale = 1.0 / (budget as f64).sqrt();
        let mut scored: Vec<(usize, f64)> = candidates
            .iter()
            .map(|&j| {
                let w = 1.0 / ((ctx.degrees[j] + 1) as f64).sqrt();
                let mut agg = agg_sum.clone();
                for (a, &x) in agg.iter_mut().zip(ctx.z_tilde.row(j)) {
                    *a = (*a + w * x) * scale;
                }
                (j, cluster_score(&agg, c_u))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        scored.truncate(n_k);
        let (pick, _) = scored
            .into_iter()
            .max_by(|a, b| {
                ctx.score[a.0]
                    .partial_cmp(&ctx.score[b.0])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.0.cmp(&a.0))
            })
            .expect("non-empty retained set");
        pool.consume(pick);
        victims.push(pick);
        add_weighted_row(&mut agg_sum, ctx, pick);
    }
    Some(DerivedCluster {
        pseudo_label: c_u,
        victims,
    })
}

fn add_weighted_row(acc: &mut [f64], ctx: &ClusterContext<'_>, node: usize) {
    let w = 1.0 / ((ctx.degrees[node] + 1) as f64).sqrt();
    for (a, &x) in acc.iter_mut().zip(ctx.z_tilde.row(node)) {
        *a += w * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::ProbKind;

    #[test]
    fn aggregated_dist_matches_worked_example() {
        // Cluster {i} with d_i = 1, z_i = [0.2, 0.5, 0.3]; candidate j with
        // d_j = 2, z_j = [0.1, 0.6, 0.3]; d_u = 2.
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 3, vec![0.2, 0.5, 0.3, 0.1, 0.6, 0.3]);
        let degrees = [1usize, 2];
        let agg = aggregated_dist(&[0, 1], &z, &degrees, 2);
        assert!((agg[0] - 0.1408).abs() < 1e-4, "{agg:?}");
        assert!((agg[1] - 0.4950).abs() < 1e-4);
        assert!((agg[2] - 0.2725).abs() < 1e-4);
        // Continued: margin of label 1.
        let s_p = cluster_score(&agg, 1);
        assert!((s_p - 0.2225).abs() < 1e-4);
    }

    #[test]
    fn singleton_cluster_is_one_weighted_row() {
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.4, 0.6]);
        let agg = aggregated_dist(&[0], &z, &[3], 1);
        let w = 1.0 / 2.0; // 1/sqrt(3+1)
        assert!((agg[0] - 0.4 * w).abs() < 1e-12);
        assert!((agg[1] - 0.6 * w).abs() < 1e-12);
    }

    #[test]
    fn aggregated_dist_is_linear_in_rows() {
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.3, 0.7, 0.8, 0.2]);
        let doubled = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.6, 1.4, 1.6, 0.4]);
        let degrees = [2usize, 5];
        let a = aggregated_dist(&[0, 1], &z, &degrees, 3);
        let b = aggregated_dist(&[0, 1], &doubled, &degrees, 3);
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_score_extremes() {
        assert!((cluster_score(&[0.0, 1.0, 0.0], 1) - 1.0).abs() < 1e-12);
        let third = 1.0 / 3.0;
        assert!(cluster_score(&[third, third, third], 1).abs() < 1e-12);
    }

    #[test]
    fn budget_one_takes_only_the_best_seed() {
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.9, 0.1, 0.2, 0.8, 0.5, 0.5]);
        let degrees = [1usize, 1, 1];
        let target = [1usize, 0, 1];
        let score = [0.3, 0.9, 0.5];
        let ctx = ClusterContext {
            z_tilde: &z,
            degrees: &degrees,
            target: &target,
            score: &score,
        };
        // Ranked by score desc: 1, 2, 0.
        let mut pool = SelectionPool::new(3, vec![1, 2, 0], &target);
        let cluster = derive_cluster(&ctx, &mut pool, 1, 10).unwrap();
        assert_eq!(cluster.victims, vec![1]);
        assert_eq!(cluster.pseudo_label, 0);
        assert_eq!(pool.remaining(), 2);
    }

    #[test]
    fn pure_sp_greedy_when_nk_is_one() {
        // Group of label 1: nodes 0, 1, 2. Seed is node 0 (best score).
        // With n_k = 1 the follow-up picks are by s_p alone.
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.1, 0.9, 0.5, 0.5, 0.05, 0.95]);
        let degrees = [1usize, 1, 1];
        let target = [1usize, 1, 1];
        let score = [1.0, 0.9, 0.1];
        let ctx = ClusterContext {
            z_tilde: &z,
            degrees: &degrees,
            target: &target,
            score: &score,
        };
        let mut pool = SelectionPool::new(3, vec![0, 1, 2], &target);
        let cluster = derive_cluster(&ctx, &mut pool, 2, 1).unwrap();
        // Node 2 has the larger label-1 margin than node 1, so s_p ranks it
        // first even though its selection score is lowest.
        assert_eq!(cluster.victims, vec![0, 2]);
    }

    #[test]
    fn exhausted_group_yields_short_cluster() {
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.2, 0.8, 0.7, 0.3]);
        let degrees = [1usize, 1];
        let target = [1usize, 0];
        let score = [0.9, 0.1];
        let ctx = ClusterContext {
            z_tilde: &z,
            degrees: &degrees,
            target: &target,
            score: &score,
        };
        let mut pool = SelectionPool::new(2, vec![0, 1], &target);
        let cluster = derive_cluster(&ctx, &mut pool, 3, 10).unwrap();
        assert_eq!(cluster.victims, vec![0]);
        // Node 1 has a different target label, so the group was empty.
        assert_eq!(pool.remaining(), 1);
    }

    #[test]
    fn empty_pool_returns_none() {
        let z = ProbMatrix::from_data(ProbKind::Smoothed, 2, vec![0.2, 0.8]);
        let target = [1usize];
        let ctx = ClusterContext {
            z_tilde: &z,
            degrees: &[1],
            target: &target,
            score: &[0.5],
        };
        let mut pool = SelectionPool::new(1, vec![0], &target);
        assert!(derive_cluster(&ctx, &mut pool, 1, 1).is_some());
        assert!(derive_cluster(&ctx, &mut pool, 1, 1).is_none());
    }
}
