//! Immutable sparse graph bundles, the injected-node overlay, and the
//! symmetric-normalized propagation kernels shared by the model and the
//! label-propagation code.

mod csbm;
mod io;

pub use csbm::{gen_csbm, CsbmParams};
pub use io::{load_bundle, load_bundle_with, save_bundle, LoadOptions};

use crate::error::{Error, Result};
use crate::injector::InjectionPlan;
use crate::sparse::{Csr, SparseRowMatrix};

/// Per-node dataset split tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Binary,
    Continuous,
}

/// Read access to a (possibly perturbed) graph: structure plus node features.
///
/// Node ids are dense; an overlay continues fake ids after the original ones.
pub trait GraphView {
    fn num_nodes(&self) -> usize;
    fn feature_dim(&self) -> usize;
    fn degree(&self, v: usize) -> usize;
    /// Visit every neighbor of `v` exactly once, in a deterministic order.
    fn visit_neighbors(&self, v: usize, f: &mut dyn FnMut(usize));
    /// Sparse feature row of `v` as parallel (indices, values) slices.
    fn feature_row(&self, v: usize) -> (&[usize], &[f64]);
}

/// Immutable original graph: symmetric CSR adjacency, sparse features,
/// labels, and a train/val/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    adj: Csr,
    features: SparseRowMatrix,
    labels: Vec<usize>,
    split: Vec<Split>,
    num_classes: usize,
    feature_kind: FeatureKind,
    value_cap: f64,
    m: usize,
}

impl GraphBundle {
    /// Assemble and validate a bundle from raw parts.
    ///
    /// `num_classes` of `None` infers the class count as `max(label) + 1`.
    pub fn from_parts(
        adj: Csr,
        features: SparseRowMatrix,
        labels: Vec<usize>,
        split: Vec<Split>,
        num_classes: Option<usize>,
        feature_kind: FeatureKind,
    ) -> Result<Self> {
        let n = adj.node_count();
        if features.rows() != n {
            return Err(Error::validation(format!(
                "feature rows {} != node count {n}",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::validation(format!(
                "label count {} != node count {n}",
                labels.len()
            )));
        }
        if split.len() != n {
            return Err(Error::validation(format!(
                "split count {} != node count {n}",
                split.len()
            )));
        }
        if !adj.is_symmetric() {
            return Err(Error::validation(
                "adjacency is not symmetric: some edge (u, v) lacks its mirror (v, u)",
            ));
        }
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let num_classes = match num_classes {
            Some(l) => {
                if max_label >= l {
                    return Err(Error::validation(format!(
                        "label {max_label} out of range for {l} classes"
                    )));
                }
                l
            }
            None => max_label + 1,
        };
        if feature_kind == FeatureKind::Binary {
            for &v in features.values() {
                if v != 1.0 {
                    return Err(Error::validation(format!(
                        "binary feature matrix holds value {v} != 1"
                    )));
                }
            }
        }
        let value_cap = match feature_kind {
            FeatureKind::Binary => 1.0,
            FeatureKind::Continuous => percentile_99_abs(features.values()),
        };
        let m = adj.entry_count() / 2;
        Ok(Self {
            adj,
            features,
            labels,
            split,
            num_classes,
            feature_kind,
            value_cap,
            m,
        })
    }

    /// Build from a list of undirected edges given once each.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        features: SparseRowMatrix,
        labels: Vec<usize>,
        split: Vec<Split>,
        num_classes: Option<usize>,
        feature_kind: FeatureKind,
    ) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) out of range (n={n})"
                )));
            }
            if u == v {
                return Err(Error::validation(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Self::from_parts(
            Csr::from_adjacency_lists(adj)?,
            features,
            labels,
            split,
            num_classes,
            feature_kind,
        )
    }

    pub fn n(&self) -> usize {
        self.adj.node_count()
    }

    /// Undirected edge count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn split(&self, v: usize) -> Split {
        self.split[v]
    }

    pub fn splits(&self) -> &[Split] {
        &self.split
    }

    /// Node ids carrying the given split tag, ascending.
    pub fn split_mask(&self, tag: Split) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.split[v] == tag).collect()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adj.neighbors(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj.degree(v)
    }

    pub fn features(&self) -> &SparseRowMatrix {
        &self.features
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    /// Maximum allowed magnitude for injected feature values.
    pub fn value_cap(&self) -> f64 {
        self.value_cap
    }

    pub fn avg_degree(&self) -> f64 {
        2.0 * self.m as f64 / self.n() as f64
    }

    /// Fraction of edges whose endpoints share a label.
    pub fn edge_homophily(&self) -> f64 {
        if self.m == 0 {
            return 0.0;
        }
        let mut same = 0usize;
        for v in 0..self.n() {
            for &u in self.adj.neighbors(v) {
                if u > v && self.labels[u] == self.labels[v] {
                    same += 1;
                }
            }
        }
        same as f64 / self.m as f64
    }
}

impl GraphView for GraphBundle {
    fn num_nodes(&self) -> usize {
        self.n()
    }

    fn feature_dim(&self) -> usize {
        self.dim()
    }

    fn degree(&self, v: usize) -> usize {
        GraphBundle::degree(self, v)
    }

    fn visit_neighbors(&self, v: usize, f: &mut dyn FnMut(usize)) {
        for &u in self.adj.neighbors(v) {
            f(u);
        }
    }

    fn feature_row(&self, v: usize) -> (&[usize], &[f64]) {
        self.features.row(v)
    }
}

/// Nearest-rank 99th percentile of absolute values.
fn percentile_99_abs(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((abs.len() as f64) * 0.99).ceil() as usize;
    abs[rank.saturating_sub(1)]
}

/// Injected-node overlay on a [`GraphBundle`].
///
/// Fake node ids continue at `n..n + fake_count`. Fake nodes never link to
/// each other, and each original node is the victim of at most one fake node,
/// so an original node's degree grows by at most one.
#[derive(Debug, Clone)]
pub struct PerturbedGraph<'a> {
    base: &'a GraphBundle,
    fake_victims: Vec<Vec<usize>>,
    fake_features: SparseRowMatrix,
    victim_owner: Vec<Option<usize>>,
}

impl<'a> PerturbedGraph<'a> {
    /// Identity perturbation: no fake nodes yet.
    pub fn new(base: &'a GraphBundle) -> Self {
        Self {
            base,
            fake_victims: Vec::new(),
            fake_features: SparseRowMatrix::with_cols(base.dim()),
            victim_owner: vec![None; base.n()],
        }
    }

    /// Materialize a plan against its base bundle. The base is never mutated.
    pub fn materialize(plan: &InjectionPlan, base: &'a GraphBundle) -> Result<Self> {
        let mut g = Self::new(base);
        for fake in &plan.fakes {
            let mut feature = fake.feature.clone();
            feature.sort_unstable_by_key(|&(idx, _)| idx);
            g.add_fake_node(&fake.victims, &feature)?;
        }
        Ok(g)
    }

    /// Wire one new fake node to `victims` with the given sparse feature.
    ///
    /// Rejects victims already claimed by another fake node, out-of-range
    /// ids (which would include fake-fake edges), and duplicate victims.
    pub fn add_fake_node(&mut self, victims: &[usize], feature: &[(usize, f64)]) -> Result<usize> {
        let n = self.base.n();
        let fake_id = n + self.fake_victims.len();
        let mut sorted: Vec<usize> = victims.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::validation(format!(
                    "fake node {fake_id} lists victim {} twice",
                    pair[0]
                )));
            }
        }
        for &v in &sorted {
            if v >= n {
                return Err(Error::validation(format!(
                    "fake node {fake_id} targets non-original node {v} (fake-fake edges are forbidden)"
                )));
            }
            if let Some(owner) = self.victim_owner[v] {
                return Err(Error::validation(format!(
                    "node {v} is already the victim of fake node {owner}"
                )));
            }
        }
        self.fake_features.push_row(feature)?;
        for &v in &sorted {
            self.victim_owner[v] = Some(fake_id);
        }
        self.fake_victims.push(sorted);
        Ok(fake_id)
    }

    pub fn base(&self) -> &GraphBundle {
        self.base
    }

    pub fn fake_count(&self) -> usize {
        self.fake_victims.len()
    }

    /// Victims of fake node `u` (0-based among fakes), ascending.
    pub fn fake_victims(&self, u: usize) -> &[usize] {
        &self.fake_victims[u]
    }

    pub fn total_fake_edges(&self) -> usize {
        self.fake_victims.iter().map(Vec::len).sum()
    }

    /// All (fake_id, original_id) pairs.
    pub fn fake_edges(&self) -> Vec<(usize, usize)> {
        let n = self.base.n();
        let mut out = Vec::with_capacity(self.total_fake_edges());
        for (u, victims) in self.fake_victims.iter().enumerate() {
            for &v in victims {
                out.push((n + u, v));
            }
        }
        out
    }
}

impl GraphView for PerturbedGraph<'_> {
    fn num_nodes(&self) -> usize {
        self.base.n() + self.fake_victims.len()
    }

    fn feature_dim(&self) -> usize {
        self.base.dim()
    }

    fn degree(&self, v: usize) -> usize {
        let n = self.base.n();
        if v < n {
            self.base.degree(v) + usize::from(self.victim_owner[v].is_some())
        } else {
            self.fake_victims[v - n].len()
        }
    }

    fn visit_neighbors(&self, v: usize, f: &mut dyn FnMut(usize)) {
        let n = self.base.n();
        if v < n {
            for &u in self.base.neighbors(v) {
                f(u);
            }
            if let Some(owner) = self.victim_owner[v] {
                f(owner);
            }
        } else {
            for &u in &self.fake_victims[v - n] {
                f(u);
            }
        }
    }

    fn feature_row(&self, v: usize) -> (&[usize], &[f64]) {
        let n = self.base.n();
        if v < n {
            self.base.features.row(v)
        } else {
            self.fake_features.row(v - n)
        }
    }
}

/// One application of the symmetric-normalized adjacency without self-loops:
/// `out[i] = sum_{j in N(i)} data[j] / (sqrt(d_i) sqrt(d_j))`.
///
/// Rows of degree-0 nodes come out all-zero. `data` is row-major with `cols`
/// values per node.
pub fn sym_norm_propagate(g: &impl GraphView, cols: usize, data: &[f64]) -> Vec<f64> {
    let n = g.num_nodes();
    assert_eq!(data.len(), n * cols, "row data shape mismatch");
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| {
            let d = g.degree(v);
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();
    let mut out = vec![0.0; n * cols];
    for v in 0..n {
        let mut acc = vec![0.0; cols];
        g.visit_neighbors(v, &mut |u| {
            let w = inv_sqrt[v] * inv_sqrt[u];
            for (a, &x) in acc.iter_mut().zip(&data[u * cols..(u + 1) * cols]) {
                *a += w * x;
            }
        });
        out[v * cols..(v + 1) * cols].copy_from_slice(&acc);
    }
    out
}

/// One application of the renormalized adjacency with self-loops:
/// `out[i] = sum_{j in N(i) + {i}} data[j] / (sqrt(d_i + 1) sqrt(d_j + 1))`.
pub fn sym_norm_propagate_self_loops(g: &impl GraphView, cols: usize, data: &[f64]) -> Vec<f64> {
    let n = g.num_nodes();
    assert_eq!(data.len(), n * cols, "row data shape mismatch");
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut out = vec![0.0; n * cols];
    for v in 0..n {
        let mut acc = vec![0.0; cols];
        let self_w = inv_sqrt[v] * inv_sqrt[v];
        for (a, &x) in acc.iter_mut().zip(&data[v * cols..(v + 1) * cols]) {
            *a += self_w * x;
        }
        g.visit_neighbors(v, &mut |u| {
            let w = inv_sqrt[v] * inv_sqrt[u];
            for (a, &x) in acc.iter_mut().zip(&data[u * cols..(u + 1) * cols]) {
                *a += w * x;
            }
        });
        out[v * cols..(v + 1) * cols].copy_from_slice(&acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_bundle() -> GraphBundle {
        // Path 0-1-2 with one-hot-ish features and 2 classes.
        let features =
            SparseRowMatrix::from_rows(3, vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]])
                .unwrap();
        GraphBundle::from_edges(
            3,
            &[(0, 1), (1, 2)],
            features,
            vec![0, 0, 1],
            vec![Split::Train, Split::Val, Split::Test],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap()
    }

    #[test]
    fn smallest_valid_bundle() {
        let features = SparseRowMatrix::from_rows(1, vec![vec![(0, 1.0)], vec![]]).unwrap();
        let g = GraphBundle::from_edges(
            2,
            &[(0, 1)],
            features,
            vec![0, 0],
            vec![Split::Train, Split::Test],
            None,
            FeatureKind::Binary,
        )
        .unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.m(), 1);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        // Hand-built CSR where 3 lists 5 but 5 does not list 3.
        let mut adj = vec![Vec::new(); 6];
        adj[3] = vec![5];
        let csr = Csr::from_adjacency_lists(adj).unwrap();
        let features = SparseRowMatrix::from_rows(2, vec![vec![]; 6]).unwrap();
        let err = GraphBundle::from_parts(
            csr,
            features,
            vec![0; 6],
            vec![Split::Test; 6],
            None,
            FeatureKind::Binary,
        )
        .unwrap_err();
        assert!(err.to_string().contains("symmetric"));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let features = SparseRowMatrix::from_rows(1, vec![vec![], vec![]]).unwrap();
        let err = GraphBundle::from_edges(
            2,
            &[(0, 1)],
            features,
            vec![0, 3],
            vec![Split::Train, Split::Test],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn binary_kind_requires_unit_values() {
        let features = SparseRowMatrix::from_rows(1, vec![vec![(0, 0.7)], vec![]]).unwrap();
        let err = GraphBundle::from_edges(
            2,
            &[(0, 1)],
            features,
            vec![0, 0],
            vec![Split::Train, Split::Test],
            None,
            FeatureKind::Binary,
        )
        .unwrap_err();
        assert!(err.to_string().contains("binary"));
    }

    #[test]
    fn value_cap_is_99th_percentile_for_continuous() {
        let rows: Vec<Vec<(usize, f64)>> = (0..100).map(|i| vec![(0, (i + 1) as f64)]).collect();
        let features = SparseRowMatrix::from_rows(1, rows).unwrap();
        let mut edges = Vec::new();
        for i in 0..99 {
            edges.push((i, i + 1));
        }
        let g = GraphBundle::from_edges(
            100,
            &edges,
            features,
            vec![0; 100],
            vec![Split::Test; 100],
            None,
            FeatureKind::Continuous,
        )
        .unwrap();
        assert_eq!(g.value_cap(), 99.0);
    }

    #[test]
    fn empty_overlay_is_identity() {
        let g = tiny_bundle();
        let p = PerturbedGraph::new(&g);
        assert_eq!(p.num_nodes(), 3);
        for v in 0..3 {
            assert_eq!(p.degree(v), g.degree(v));
            let mut from_p = Vec::new();
            p.visit_neighbors(v, &mut |u| from_p.push(u));
            assert_eq!(from_p, g.neighbors(v));
        }
    }

    #[test]
    fn fake_node_bumps_victim_degree_by_one() {
        let g = tiny_bundle();
        let mut p = PerturbedGraph::new(&g);
        let fake = p.add_fake_node(&[0], &[(1, 1.0)]).unwrap();
        assert_eq!(fake, 3);
        assert_eq!(p.degree(0), g.degree(0) + 1);
        assert_eq!(p.degree(1), g.degree(1));
        assert_eq!(p.degree(3), 1);
        let mut nb = Vec::new();
        p.visit_neighbors(0, &mut |u| nb.push(u));
        assert_eq!(nb, vec![1, 3]);
    }

    #[test]
    fn single_attack_rule_enforced() {
        let g = tiny_bundle();
        let mut p = PerturbedGraph::new(&g);
        p.add_fake_node(&[0, 1], &[]).unwrap();
        let err = p.add_fake_node(&[1], &[]).unwrap_err();
        assert!(err.to_string().contains("already the victim"));
    }

    #[test]
    fn fake_fake_edges_rejected() {
        let g = tiny_bundle();
        let mut p = PerturbedGraph::new(&g);
        p.add_fake_node(&[0], &[]).unwrap();
        let err = p.add_fake_node(&[3], &[]).unwrap_err();
        assert!(err.to_string().contains("fake-fake"));
    }

    #[test]
    fn duplicate_victim_in_one_fake_rejected() {
        let g = tiny_bundle();
        let mut p = PerturbedGraph::new(&g);
        assert!(p.add_fake_node(&[0, 0], &[]).is_err());
    }

    #[test]
    fn propagate_without_self_loops_on_path() {
        let g = tiny_bundle();
        // Node degrees: 1, 2, 1. Data = identity-ish rows.
        let data = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let out = sym_norm_propagate(&g, 2, &data);
        let s = 1.0 / 2f64.sqrt();
        // Row 0 pulls from node 1: [0,1] * (1/sqrt(1*2)).
        assert!((out[0] - 0.0).abs() < 1e-12);
        assert!((out[1] - s).abs() < 1e-12);
        // Row 1 pulls from nodes 0 and 2: [1,0]*s + [0,0]*s.
        assert!((out[2] - s).abs() < 1e-12);
        assert!((out[3] - 0.0).abs() < 1e-12);
    }
}
