//! CSR adjacency and sparse row-major feature storage.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row adjacency over dense 0-based node ids.
///
/// Neighbor lists are sorted ascending and free of duplicates; symmetry is
/// the caller's contract and can be checked with [`Csr::is_symmetric`].
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Csr {
    /// Build from per-node neighbor lists. Lists are sorted; duplicates and
    /// self-loops are rejected.
    pub fn from_adjacency_lists(adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = adj.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (v, mut neighbors) in adj.into_iter().enumerate() {
            neighbors.sort_unstable();
            for pair in neighbors.windows(2) {
                if pair[0] == pair[1] {
                    return Err(Error::validation(format!(
                        "duplicate edge ({v}, {})",
                        pair[0]
                    )));
                }
            }
            for &u in &neighbors {
                if u == v {
                    return Err(Error::validation(format!("self-loop at node {v}")));
                }
                if u >= n {
                    return Err(Error::validation(format!(
                        "neighbor {u} of node {v} out of range (n={n})"
                    )));
                }
            }
            col_idx.extend_from_slice(&neighbors);
            row_ptr.push(col_idx.len());
        }
        Ok(Self { row_ptr, col_idx })
    }

    pub fn node_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Number of stored (directed) entries; twice the undirected edge count
    /// for a symmetric matrix.
    pub fn entry_count(&self) -> usize {
        self.col_idx.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_ptr[v + 1] - self.row_ptr[v]
    }

    /// True iff entry (u, v) implies entry (v, u).
    pub fn is_symmetric(&self) -> bool {
        for v in 0..self.node_count() {
            for &u in self.neighbors(v) {
                if self.neighbors(u).binary_search(&v).is_err() {
                    return false;
                }
            }
        }
        true
    }
}

/// Sparse row-major real matrix (features). Column indices within a row are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRowMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRowMatrix {
    pub fn with_cols(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut m = Self::with_cols(cols);
        for row in rows {
            m.push_row(&row)?;
        }
        Ok(m)
    }

    /// Append a row. Entries must have strictly increasing in-range indices.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) -> Result<usize> {
        let mut prev: Option<usize> = None;
        for &(idx, _) in entries {
            if idx >= self.cols {
                return Err(Error::validation(format!(
                    "feature index {idx} out of range (dim={})",
                    self.cols
                )));
            }
            if let Some(p) = prev {
                if idx <= p {
                    return Err(Error::validation(format!(
                        "feature indices not strictly increasing at {idx}"
                    )));
                }
            }
            prev = Some(idx);
        }
        for &(idx, val) in entries {
            self.col_idx.push(idx);
            self.values.push(val);
        }
        self.row_ptr.push(self.col_idx.len());
        self.rows += 1;
        Ok(self.rows - 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `self * w` where `w` is dense `cols x k`.
    pub fn matmul_dense(&self, w: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, w.rows(), "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, w.cols());
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&k, &x) in idx.iter().zip(vals) {
                let w_row = w.row(k);
                for (j, &wv) in w_row.iter().enumerate() {
                    out_row[j] += x * wv;
                }
            }
        }
        out
    }

    /// `self^T * g` where `g` is dense `rows x k`.
    pub fn transpose_matmul_dense(&self, g: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, g.rows(), "transpose_matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, g.cols());
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let g_row = g.row(r);
            for (&k, &x) in idx.iter().zip(vals) {
                let out_row = out.row_mut(k);
                for (j, &gv) in g_row.iter().enumerate() {
                    out_row[j] += x * gv;
                }
            }
        }
        out
    }
}
