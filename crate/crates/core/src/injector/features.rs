//! Malicious feature synthesis for injected nodes.
//!
//! Element values come from a per-(class, index) statistic over the original
//! graph: the mean absolute value over the nodes of that class holding the
//! element, zero where none does. An element is eligible when its weight
//! margin toward the pseudo label is positive; the final vector draws the
//! budgeted count uniformly from the top-ranked eligible elements.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::dense::DenseMatrix;
use crate::graph::GraphBundle;
use crate::propagation::ProbMatrix;

/// Non-zero feature budget per injected node: `floor(total_nnz / n)`.
pub fn feature_budget(g: &GraphBundle) -> usize {
    g.features().nnz() / g.n()
}

/// Per-(class, index) element statistic plus the classes with no member
/// node. The matrix is `num_classes x dim`.
pub fn element_values(g: &GraphBundle, labels: &[usize]) -> (DenseMatrix, Vec<usize>) {
    let classes = g.num_classes();
    let dim = g.dim();
    let mut sums = DenseMatrix::zeros(classes, dim);
    let mut counts = vec![0u32; classes * dim];
    let mut class_sizes = vec![0usize; classes];
    for v in 0..g.n() {
        let c = labels[v];
        class_sizes[c] += 1;
        let (idx, vals) = g.features().row(v);
        for (&k, &x) in idx.iter().zip(vals) {
            if x != 0.0 {
                sums.set(c, k, sums.get(c, k) + x.abs());
                counts[c * dim + k] += 1;
            }
        }
    }
    let mut values = DenseMatrix::zeros(classes, dim);
    for c in 0..classes {
        for k in 0..dim {
            let count = counts[c * dim + k];
            if count > 0 {
                values.set(c, k, sums.get(c, k) / f64::from(count));
            }
        }
    }
    let absent = (0..classes).filter(|&c| class_sizes[c] == 0).collect();
    (values, absent)
}

/// How often each element is non-zero within each class (`num_classes x dim`
/// in row-major order). Feeds the most-frequent-element baseline.
pub fn nonzero_counts(g: &GraphBundle, labels: &[usize]) -> Vec<u32> {
    let classes = g.num_classes();
    let dim = g.dim();
    let mut counts = vec![0u32; classes * dim];
    for v in 0..g.n() {
        let (idx, vals) = g.features().row(v);
        for (&k, &x) in idx.iter().zip(vals) {
            if x != 0.0 {
                counts[labels[v] * dim + k] += 1;
            }
        }
    }
    counts
}

/// Generate the sparse feature vector for one fake node.
///
/// `x_values` is the (already magnitude-capped) element statistic table.
/// Returns index-sorted entries; empty when no element has a positive score.
pub fn generate_feature(
    c_u: usize,
    cluster: &[usize],
    z_tilde: &ProbMatrix,
    degrees: &[usize],
    w_bar: &DenseMatrix,
    x_values: &DenseMatrix,
    delta_x: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<(usize, f64)> {
    let classes = z_tilde.classes();
    let dim = w_bar.rows();
    assert_eq!(w_bar.cols(), classes, "weight table class count");
    assert!(classes >= 2, "need at least two classes");
    if delta_x == 0 || cluster.is_empty() {
        return Vec::new();
    }

    // Strongest rival label of the aggregated cluster distribution.
    let mut agg = vec![0.0; classes];
    for &i in cluster {
        let w = 1.0 / ((degrees[i] + 1) as f64).sqrt();
        for (a, &x) in agg.iter_mut().zip(z_tilde.row(i)) {
            *a += w * x;
        }
    }
    let mut c_z = usize::from(c_u == 0);
    for (c, &x) in agg.iter().enumerate() {
        if c != c_u && x > agg[c_z] {
            c_z = c;
        }
    }

    let mut scored: Vec<(usize, f64)> = (0..dim)
        .filter_map(|k| {
            let s = (w_bar.get(k, c_u) - w_bar.get(k, c_z)) * x_values.get(c_u, k);
            (s > 0.0).then_some((k, s))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });

    let chosen: Vec<usize> = if scored.len() <= delta_x {
        scored.iter().map(|&(k, _)| k).collect()
    } else {
        let pool_len = (2 * delta_x).min(dim).min(scored.len());
        let mut pool: Vec<usize> = scored[..pool_len].iter().map(|&(k, _)| k).collect();
        for i in 0..delta_x {
            let j = rng.random_range(i..pool_len);
            pool.swap(i, j);
        }
        pool.truncate(delta_x);
        pool
    };
    let mut entries: Vec<(usize, f64)> = chosen
        .into_iter()
        .map(|k| (k, x_values.get(c_u, k)))
        .collect();
    entries.sort_unstable_by_key(|&(k, _)| k);
    entries
}

/// Copy a uniformly chosen original node's feature row, truncated to the
/// `delta_x` largest-magnitude entries and capped at the bundle's value cap.
pub fn random_copy_feature(
    g: &GraphBundle,
    delta_x: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<(usize, f64)> {
    let v = rng.random_range(0..g.n());
    let (idx, vals) = g.features().row(v);
    let cap = g.value_cap();
    let mut entries: Vec<(usize, f64)> = idx
        .iter()
        .zip(vals)
        .map(|(&k, &x)| (k, x.clamp(-cap, cap)))
        .collect();
    if entries.len() > delta_x {
        entries.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        entries.truncate(delta_x);
    }
    entries.sort_unstable_by_key(|&(k, _)| k);
    entries
}

/// The `delta_x` most frequently non-zero elements among class-`c_u` nodes,
/// valued by the element statistic table.
pub fn most_frequent_feature(
    c_u: usize,
    counts: &[u32],
    dim: usize,
    x_values: &DenseMatrix,
    delta_x: usize,
) -> Vec<(usize, f64)> {
    let class_counts = &counts[c_u * dim..(c_u + 1) * dim];
    let mut ranked: Vec<usize> = (0..dim).filter(|&k| class_counts[k] > 0).collect();
    ranked.sort_by(|&a, &b| class_counts[b].cmp(&class_counts[a]).then(a.cmp(&b)));
    ranked.truncate(delta_x);
    ranked.sort_unstable();
    ranked
        .into_iter()
        .map(|k| (k, x_values.get(c_u, k)))
        .collect()
}
