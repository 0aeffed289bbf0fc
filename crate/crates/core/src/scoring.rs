//! Per-node attack scores: target labels, target-label similarity, and the
//! vulnerability / topological / propagation weights that rank victims.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{GraphBundle, GraphView, Split};
use crate::propagation::ProbMatrix;

/// Which original nodes are eligible as victims. Degree-0 nodes are always
/// excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimPool {
    All,
    NonTrain,
    TestOnly,
}

impl VictimPool {
    fn admits(&self, split: Split) -> bool {
        match self {
            VictimPool::All => true,
            VictimPool::NonTrain => split != Split::Train,
            VictimPool::TestOnly => split == Split::Test,
        }
    }
}

/// Target label per node: the runner-up class of its distribution,
/// `argmax_{c != y_v} z_{v,c}`, ties to the lowest class id.
pub fn target_labels(z: &ProbMatrix, y: &[usize]) -> Result<Vec<usize>> {
    if z.classes() < 2 {
        return Err(Error::config(
            "target labels need at least 2 classes".to_string(),
        ));
    }
    assert_eq!(z.rows(), y.len(), "prediction/label length mismatch");
    Ok((0..z.rows())
        .map(|v| {
            let row = z.row(v);
            let mut best: Option<usize> = None;
            for (c, &p) in row.iter().enumerate() {
                if c == y[v] {
                    continue;
                }
                if best.is_none_or(|b| p > row[b]) {
                    best = Some(c);
                }
            }
            best.expect("at least two classes")
        })
        .collect())
}

/// Target-label similarity: the fraction of each node's neighbors sharing
/// its target label. Degree-0 nodes report 0.
pub fn similarity(g: &impl GraphView, c_b: &[usize]) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|v| {
            let d = g.degree(v);
            if d == 0 {
                return 0.0;
            }
            let mut same = 0usize;
            g.visit_neighbors(v, &mut |u| {
                if c_b[u] == c_b[v] {
                    same += 1;
                }
            });
            same as f64 / d as f64
        })
        .collect()
}

/// Mean similarity over nodes of degree >= 1.
pub fn mean_similarity(g: &impl GraphView, c_b: &[usize]) -> f64 {
    let h = similarity(g, c_b);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, &hv) in h.iter().enumerate() {
        if g.degree(v) > 0 {
            sum += hv;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Vulnerability weight: `|{j in N(v): y_j = y_v}| / (d_v^2 + d_v)`.
pub fn vulnerability_scores(g: &impl GraphView, y: &[usize]) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|v| {
            let d = g.degree(v);
            if d == 0 {
                return 0.0;
            }
            let mut same = 0usize;
            g.visit_neighbors(v, &mut |u| {
                if y[u] == y[v] {
                    same += 1;
                }
            });
            same as f64 / (d * d + d) as f64
        })
        .collect()
}

/// Topological weight:
/// `(|{j: c_b_j = c_b_v}| - |{j: y_j = c_b_v}|) / d_v`.
pub fn topology_scores(g: &impl GraphView, y: &[usize], c_b: &[usize]) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|v| {
            let d = g.degree(v);
            if d == 0 {
                return 0.0;
            }
            let mut target_matches = 0i64;
            let mut predicted_matches = 0i64;
            g.visit_neighbors(v, &mut |u| {
                if c_b[u] == c_b[v] {
                    target_matches += 1;
                }
                if y[u] == c_b[v] {
                    predicted_matches += 1;
                }
            });
            (target_matches - predicted_matches) as f64 / d as f64
        })
        .collect()
}

/// Propagation score: `beta * s1 + (1 - beta) * s2`, elementwise.
pub fn propagation_scores(s1: &[f64], s2: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!("beta={beta} outside [0, 1]")));
    }
    assert_eq!(s1.len(), s2.len());
    Ok(s1
        .iter()
        .zip(s2)
        .map(|(&a, &b)| beta * a + (1.0 - beta) * b)
        .collect())
}

/// All per-node scores plus the candidate grouping used by the attack.
#[derive(Debug, Clone)]
pub struct NodeScores {
    /// Predicted label per node.
    pub y: Vec<usize>,
    /// Target label per node.
    pub c_b: Vec<usize>,
    /// Target-label similarity per node.
    pub h: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s_h: Vec<f64>,
    /// Candidate victims, ordered by (s_h desc, id asc).
    pub candidates: Vec<usize>,
    /// Candidates grouped by target label, each group ordered like
    /// `candidates`.
    pub groups: BTreeMap<usize, Vec<usize>>,
}

impl NodeScores {
    /// Score every node of the bundle and group the eligible victims.
    pub fn compute(
        g: &GraphBundle,
        y: Vec<usize>,
        c_b: Vec<usize>,
        beta: f64,
        pool: VictimPool,
    ) -> Result<Self> {
        let h = similarity(g, &c_b);
        let s1 = vulnerability_scores(g, &y);
        let s2 = topology_scores(g, &y, &c_b);
        let s_h = propagation_scores(&s1, &s2, beta)?;

        let mut candidates: Vec<usize> = (0..g.n())
            .filter(|&v| g.degree(v) > 0 && pool.admits(g.split(v)))
            .collect();
        candidates.sort_by(|&a, &b| {
            s_h[b]
                .partial_cmp(&s_h[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in &candidates {
            groups.entry(c_b[v]).or_default().push(v);
        }
        Ok(Self {
            y,
            c_b,
            h,
            s1,
            s2,
            s_h,
            candidates,
            groups,
        })
    }

    /// CSV dump with columns `node,y,c_b,h,s1,s2,s_h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,y,c_b,h,s1,s2,s_h\n");
        for v in 0..self.y.len() {
            writeln!(
                out,
                "{v},{},{},{:.6},{:.6},{:.6},{:.6}",
                self.y[v], self.c_b[v], self.h[v], self.s1[v], self.s2[v], self.s_h[v]
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FeatureKind;
    use crate::propagation::ProbKind;
    use crate::sparse::SparseRowMatrix;

    fn star(n_leaves: usize, labels: Vec<usize>, classes: usize) -> GraphBundle {
        let n = n_leaves + 1;
        let edges: Vec<(usize, usize)> = (1..=n_leaves).map(|v| (0, v)).collect();
        let features = SparseRowMatrix::from_rows(1, vec![vec![]; n]).unwrap();
        GraphBundle::from_edges(
            n,
            &edges,
            features,
            labels,
            vec![Split::Test; n],
            Some(classes),
            FeatureKind::Binary,
        )
        .unwrap()
    }

    #[test]
    fn two_classes_force_the_other_label() {
        let z = ProbMatrix::from_data(ProbKind::RawSoftmax, 2, vec![0.8, 0.2, 0.3, 0.7]);
        let y = vec![0, 1];
        assert_eq!(target_labels(&z, &y).unwrap(), vec![1, 0]);
    }

    #[test]
    fn runner_up_class_is_selected() {
        let z = ProbMatrix::from_data(ProbKind::RawSoftmax, 3, vec![0.5, 0.3, 0.2]);
        assert_eq!(target_labels(&z, &[0]).unwrap(), vec![1]);
    }

    #[test]
    fn single_class_rejected() {
        let z = ProbMatrix::from_data(ProbKind::RawSoftmax, 1, vec![1.0]);
        assert!(target_labels(&z, &[0]).is_err());
    }

    #[test]
    fn target_label_ties_break_low() {
        let z = ProbMatrix::from_data(ProbKind::RawSoftmax, 3, vec![0.2, 0.4, 0.4]);
        // y = 0; classes 1 and 2 tie; expect 1.
        assert_eq!(target_labels(&z, &[0]).unwrap(), vec![1]);
    }

    #[test]
    fn similarity_extremes() {
        // Center 0 with 3 leaves; c_b = [0, 0, 0, 0]: all neighbors match.
        let g = star(3, vec![0, 1, 1, 1], 2);
        let all = similarity(&g, &[0, 0, 0, 0]);
        assert_eq!(all[0], 1.0);
        let none = similarity(&g, &[0, 1, 1, 1]);
        assert_eq!(none[0], 0.0);
        let two_of_three = similarity(&g, &[0, 0, 0, 1]);
        assert!((two_of_three[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn vulnerability_matches_hand_computation() {
        // Degree 1, agreeing neighbor: 1 / (1 + 1) = 1/2.
        let g2 = star(1, vec![0, 0], 2);
        assert!((vulnerability_scores(&g2, &[0, 0])[0] - 0.5).abs() < 1e-12);
        // Degree 3, two agreeing neighbors: 2 / 12 = 1/6.
        let g = star(3, vec![0, 0, 0, 1], 2);
        let s1 = vulnerability_scores(&g, &[0, 0, 0, 1]);
        assert!((s1[0] - 1.0 / 6.0).abs() < 1e-12);
        // No agreeing neighbors: 0.
        let s1 = vulnerability_scores(&g, &[0, 1, 1, 1]);
        assert_eq!(s1[0], 0.0);
    }

    #[test]
    fn topology_matches_hand_computation() {
        let g = star(3, vec![0, 1, 1, 1], 2);
        // All neighbor targets match center's target, none predicted as it.
        let s2 = topology_scores(&g, &[0, 0, 0, 0], &[1, 1, 1, 1]);
        assert!((s2[0] - 1.0).abs() < 1e-12);
        // Two target matches, one predicted match: (2 - 1) / 3.
        let s2 = topology_scores(&g, &[0, 0, 0, 1], &[1, 1, 1, 0]);
        assert!((s2[0] - 1.0 / 3.0).abs() < 1e-12);
        // Symmetric counts cancel.
        let s2 = topology_scores(&g, &[0, 1, 0, 0], &[1, 1, 0, 0]);
        assert_eq!(s2[0], 0.0);
    }

    #[test]
    fn propagation_score_endpoints_and_midpoint() {
        let s1 = vec![1.0 / 6.0];
        let s2 = vec![1.0 / 3.0];
        assert_eq!(propagation_scores(&s1, &s2, 1.0).unwrap(), s1);
        assert_eq!(propagation_scores(&s1, &s2, 0.0).unwrap(), s2);
        let mid = propagation_scores(&s1, &s2, 0.5).unwrap();
        assert!((mid[0] - 0.25).abs() < 1e-12);
        assert!(propagation_scores(&s1, &s2, 1.5).is_err());
    }

    #[test]
    fn groups_partition_candidates() {
        let g = star(4, vec![0, 1, 1, 0, 0], 3);
        let y = vec![0, 1, 1, 0, 0];
        let c_b = vec![1, 2, 2, 1, 2];
        let scores = NodeScores::compute(&g, y, c_b.clone(), 0.5, VictimPool::All).unwrap();
        let grouped: usize = scores.groups.values().map(Vec::len).sum();
        assert_eq!(grouped, scores.candidates.len());
        for (&label, members) in &scores.groups {
            for &v in members {
                assert_eq!(c_b[v], label);
            }
        }
    }

    #[test]
    fn pool_filters_splits() {
        let features = SparseRowMatrix::from_rows(1, vec![vec![]; 3]).unwrap();
        let g = GraphBundle::from_edges(
            3,
            &[(0, 1), (1, 2), (0, 2)],
            features,
            vec![0, 1, 0],
            vec![Split::Train, Split::Val, Split::Test],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap();
        let y = vec![0, 1, 0];
        let c_b = vec![1, 0, 1];
        let all = NodeScores::compute(&g, y.clone(), c_b.clone(), 0.5, VictimPool::All).unwrap();
        assert_eq!(all.candidates.len(), 3);
        let non_train =
            NodeScores::compute(&g, y.clone(), c_b.clone(), 0.5, VictimPool::NonTrain).unwrap();
        assert_eq!(non_train.candidates, {
            let mut c = non_train.candidates.clone();
            c.sort_unstable_by(|&a, &b| {
                non_train.s_h[b]
                    .partial_cmp(&non_train.s_h[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            c
        });
        assert!(!non_train.candidates.contains(&0));
        let test_only = NodeScores::compute(&g, y, c_b, 0.5, VictimPool::TestOnly).unwrap();
        assert_eq!(test_only.candidates, vec![2]);
    }
}
