//! Label-propagation smoothing over soft predictions, the one-step
//! post-injection update for a victim node, and reference hard-label
//! propagation.
//!
//! Smoothing iterates
//!
//! ```text
//! Z^{t+1} = alpha * D^{-1/2} A D^{-1/2} Z^t + (1 - alpha) * Z^0
//! ```
//!
//! with the adjacency taken without self-loops, until the max-abs row change
//! drops below `tol` or the iteration cap is hit. For `alpha < 1` the map is
//! a contraction, so the iterate converges to the fixed point
//! `(I - alpha*S)^{-1} (1 - alpha) Z^0`.

use crate::error::{Error, Result};
use crate::graph::{sym_norm_propagate, GraphView};

/// Provenance of the rows held in a [`ProbMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbKind {
    /// Softmax output; rows sum to 1.
    RawSoftmax,
    /// Smoothing output; rows are nonnegative but need not sum to 1 under
    /// the symmetric normalization.
    Smoothed,
    /// One-hot rows.
    OneHot,
}

/// Row-per-node class distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    rows: usize,
    classes: usize,
    data: Vec<f64>,
    kind: ProbKind,
}

impl ProbMatrix {
    pub fn from_data(kind: ProbKind, classes: usize, data: Vec<f64>) -> Self {
        assert!(classes > 0 && data.len() % classes == 0, "shape mismatch");
        Self {
            rows: data.len() / classes,
            classes,
            data,
            kind,
        }
    }

    pub fn one_hot(labels: &[usize], classes: usize) -> Self {
        let mut data = vec![0.0; labels.len() * classes];
        for (v, &c) in labels.iter().enumerate() {
            assert!(c < classes, "label out of range");
            data[v * classes + c] = 1.0;
        }
        Self {
            rows: labels.len(),
            classes,
            data,
            kind: ProbKind::OneHot,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn kind(&self) -> ProbKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.data[v * self.classes..(v + 1) * self.classes]
    }

    /// Per-row argmax; ties break to the lowest class id.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows).map(|v| argmax(self.row(v))).collect()
    }

    pub fn max_abs_diff(&self, other: &ProbMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.classes, other.classes);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Check the row invariants for this matrix's kind.
    pub fn validate(&self) -> Result<()> {
        for v in 0..self.rows {
            let row = self.row(v);
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("non-finite entry in row {v}")));
            }
            match self.kind {
                ProbKind::RawSoftmax | ProbKind::OneHot => {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::validation(format!(
                            "row {v} sums to {sum}, expected 1"
                        )));
                    }
                }
                ProbKind::Smoothed => {
                    if row.iter().any(|&x| x < -1e-12) {
                        return Err(Error::validation(format!("negative entry in row {v}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Argmax with ties broken to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Smooth `z0` over the graph. Isolated nodes pass through unchanged.
pub fn smooth(
    g: &impl GraphView,
    z0: &ProbMatrix,
    alpha: f64,
    max_iters: usize,
    tol: f64,
) -> Result<ProbMatrix> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config(format!(
            "alpha={alpha} outside [0, 1): the recursion would not contract"
        )));
    }
    let n = g.num_nodes();
    if z0.rows() != n {
        return Err(Error::validation(format!(
            "prediction rows {} != node count {n}",
            z0.rows()
        )));
    }
    let classes = z0.classes();
    if alpha == 0.0 || max_iters == 0 {
        return Ok(ProbMatrix::from_data(
            ProbKind::Smoothed,
            classes,
            z0.data().to_vec(),
        ));
    }

    let mut current = z0.data().to_vec();
    for _ in 0..max_iters {
        let propagated = sym_norm_propagate(g, classes, &current);
        let mut max_change = 0.0f64;
        let mut next = vec![0.0; current.len()];
        for v in 0..n {
            let span = v * classes..(v + 1) * classes;
            if g.degree(v) == 0 {
                next[span.clone()].copy_from_slice(&z0.data()[span.clone()]);
            } else {
                for c in 0..classes {
                    let i = v * classes + c;
                    next[i] = alpha * propagated[i] + (1.0 - alpha) * z0.data()[i];
                }
            }
            for i in span {
                max_change = max_change.max((next[i] - current[i]).abs());
            }
        }
        current = next;
        if max_change < tol {
            break;
        }
    }
    Ok(ProbMatrix::from_data(ProbKind::Smoothed, classes, current))
}

/// One synchronous smoothing update for a single node, without injection:
/// `alpha * sum_{j in N(v)} z_j / (sqrt(d_v) sqrt(d_j)) + (1 - alpha) * z_v`.
///
/// The same matrix serves as current state and anchor, matching a first
/// update step from `z`.
pub fn smoothing_row_update(g: &impl GraphView, z: &ProbMatrix, v: usize, alpha: f64) -> Vec<f64> {
    let classes = z.classes();
    let mut acc = vec![0.0; classes];
    let d_v = g.degree(v);
    if d_v > 0 {
        let inv_sqrt_v = 1.0 / (d_v as f64).sqrt();
        g.visit_neighbors(v, &mut |u| {
            let w = inv_sqrt_v / (g.degree(u).max(1) as f64).sqrt();
            for (a, &x) in acc.iter_mut().zip(z.row(u)) {
                *a += w * x;
            }
        });
    }
    acc.iter()
        .zip(z.row(v))
        .map(|(&p, &z0)| alpha * p + (1.0 - alpha) * z0)
        .collect()
}

/// The victim's one-step distribution after wiring a fake node of degree
/// `fake_degree` and distribution `fake_dist` to it:
///
/// ```text
/// alpha * sum_{j in N(v)} z_j / (sqrt(d_v + 1) sqrt(d_j))
///   + alpha * fake_dist / (sqrt(d_v + 1) sqrt(d_u))
///   + (1 - alpha) * z_v
/// ```
pub fn simulate_injection_step(
    g: &impl GraphView,
    z: &ProbMatrix,
    victim: usize,
    fake_dist: &[f64],
    fake_degree: usize,
    alpha: f64,
) -> Vec<f64> {
    assert_eq!(fake_dist.len(), z.classes(), "fake distribution length");
    assert!(fake_degree >= 1, "fake node needs at least one edge");
    let classes = z.classes();
    let inv_sqrt_v = 1.0 / ((g.degree(victim) + 1) as f64).sqrt();
    let mut acc = vec![0.0; classes];
    g.visit_neighbors(victim, &mut |u| {
        let w = inv_sqrt_v / (g.degree(u).max(1) as f64).sqrt();
        for (a, &x) in acc.iter_mut().zip(z.row(u)) {
            *a += w * x;
        }
    });
    let w_fake = inv_sqrt_v / (fake_degree as f64).sqrt();
    for (a, &x) in acc.iter_mut().zip(fake_dist) {
        *a += w_fake * x;
    }
    acc.iter()
        .zip(z.row(victim))
        .map(|(&p, &z0)| alpha * p + (1.0 - alpha) * z0)
        .collect()
}

/// Hard-label propagation: `rounds` synchronous rounds of
/// majority-of-neighbors relabeling. Ties break to the smallest label id;
/// isolated nodes keep their label.
pub fn hard_label_prop(g: &impl GraphView, y0: &[usize], rounds: usize) -> Vec<usize> {
    assert_eq!(y0.len(), g.num_nodes(), "label vector length");
    let classes = y0.iter().copied().max().map_or(1, |m| m + 1);
    let mut labels = y0.to_vec();
    for _ in 0..rounds {
        let mut next = labels.clone();
        let mut changed = false;
        for v in 0..g.num_nodes() {
            if g.degree(v) == 0 {
                continue;
            }
            let mut counts = vec![0usize; classes];
            g.visit_neighbors(v, &mut |u| counts[labels[u]] += 1);
            let mut best = 0;
            for (c, &k) in counts.iter().enumerate().skip(1) {
                if k > counts[best] {
                    best = c;
                }
            }
            if next[v] != best {
                next[v] = best;
                changed = true;
            }
        }
        labels = next;
        if !changed {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FeatureKind, GraphBundle, Split};
    use crate::sparse::SparseRowMatrix;

    fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> GraphBundle {
        let features = SparseRowMatrix::from_rows(1, vec![vec![]; n]).unwrap();
        GraphBundle::from_edges(
            n,
            edges,
            features,
            vec![0; n],
            vec![Split::Test; n],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap()
    }

    #[test]
    fn alpha_zero_returns_anchor() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let z0 = ProbMatrix::one_hot(&[0, 1], 2);
        let out = smooth(&g, &z0, 0.0, 50, 1e-8).unwrap();
        assert_eq!(out.data(), z0.data());
    }

    #[test]
    fn alpha_at_or_above_one_rejected() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let z0 = ProbMatrix::one_hot(&[0, 1], 2);
        assert!(smooth(&g, &z0, 1.0, 50, 1e-8).is_err());
        assert!(smooth(&g, &z0, 1.5, 50, 1e-8).is_err());
    }

    #[test]
    fn two_node_path_fixed_point() {
        // Closed form (I - alpha*S)^{-1} (1 - alpha) Z0 for the 2-path with
        // Z0 = I gives row 0 = [0.5263..., 0.4736...] at alpha = 0.9.
        let g = graph_from_edges(2, &[(0, 1)]);
        let z0 = ProbMatrix::one_hot(&[0, 1], 2);
        let out = smooth(&g, &z0, 0.9, 10_000, 1e-12).unwrap();
        let denom = 1.0 - 0.81f64;
        let expect = [0.1 / denom, 0.09 / denom];
        assert!((out.row(0)[0] - expect[0]).abs() < 1e-9);
        assert!((out.row(0)[1] - expect[1]).abs() < 1e-9);
        assert!((out.row(0)[0] - 0.5263).abs() < 1e-4);
        assert!((out.row(0)[1] - 0.4737).abs() < 1e-4);
    }

    #[test]
    fn isolated_node_passes_through() {
        let g = graph_from_edges(3, &[(0, 1)]);
        let z0 = ProbMatrix::from_data(ProbKind::RawSoftmax, 2, vec![0.5, 0.5, 0.9, 0.1, 0.3, 0.7]);
        let out = smooth(&g, &z0, 0.9, 200, 1e-10).unwrap();
        assert_eq!(out.row(2), &[0.3, 0.7]);
    }

    #[test]
    fn injection_step_matches_worked_example() {
        // Victim 0 with one neighbor: d_v = 1, neighbor z = [1, 0],
        // z0_v = [1, 0], fake [0, 1] with d_u = 1, alpha = 0.9.
        let g = graph_from_edges(2, &[(0, 1)]);
        let z = ProbMatrix::one_hot(&[0, 0], 2);
        let out = simulate_injection_step(&g, &z, 0, &[0.0, 1.0], 1, 0.9);
        let s = 0.9 / 2f64.sqrt();
        assert!((out[0] - (s + 0.1)).abs() < 1e-12);
        assert!((out[1] - s).abs() < 1e-12);
        assert!((out[0] - 0.7364).abs() < 1e-4);
        assert!((out[1] - 0.6364).abs() < 1e-4);
    }

    #[test]
    fn injection_step_equals_smoothing_update_on_perturbed_graph() {
        // The injection step on the original graph must equal the plain
        // row update on the graph with the fake node wired in.
        let g = graph_from_edges(4, &[(0, 1), (0, 2), (2, 3)]);
        let z = ProbMatrix::from_data(
            ProbKind::RawSoftmax,
            2,
            vec![0.6, 0.4, 0.2, 0.8, 0.5, 0.5, 0.9, 0.1],
        );
        let fake_dist = [0.25, 0.75];
        let mut perturbed = crate::graph::PerturbedGraph::new(&g);
        perturbed.add_fake_node(&[0], &[]).unwrap();
        let mut z_ext = z.data().to_vec();
        z_ext.extend_from_slice(&fake_dist);
        let z_ext = ProbMatrix::from_data(ProbKind::RawSoftmax, 2, z_ext);

        let simulated = simulate_injection_step(&g, &z, 0, &fake_dist, 1, 0.9);
        let reference = smoothing_row_update(&perturbed, &z_ext, 0, 0.9);
        for (a, b) in simulated.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_fake_distribution_only_shifts_normalization() {
        let g = graph_from_edges(3, &[(0, 1), (1, 2)]);
        let z = ProbMatrix::one_hot(&[0, 1, 0], 2);
        let with_zero = simulate_injection_step(&g, &z, 1, &[0.0, 0.0], 3, 0.9);
        // Same update with the victim's degree bumped but no fake mass.
        let inv = 1.0 / 3f64.sqrt();
        let expect0 = 0.9 * (inv * 1.0 + inv * 1.0);
        assert!((with_zero[0] - expect0).abs() < 1e-12);
        assert!((with_zero[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn all_same_labels_is_hard_lp_fixed_point() {
        let g = graph_from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let labels = hard_label_prop(&g, &[1, 1, 1, 1], 5);
        assert_eq!(labels, vec![1, 1, 1, 1]);
    }

    #[test]
    fn star_center_flips_to_leaf_majority() {
        let g = graph_from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        let labels = hard_label_prop(&g, &[0, 1, 1, 1], 1);
        assert_eq!(labels[0], 1);
    }

    #[test]
    fn hard_lp_tie_breaks_to_lowest_label() {
        // Node 2 sees one neighbor of label 0 and one of label 1.
        let g = graph_from_edges(3, &[(0, 2), (1, 2)]);
        let labels = hard_label_prop(&g, &[0, 1, 1], 1);
        assert_eq!(labels[2], 0);
    }
}
