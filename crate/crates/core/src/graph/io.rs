//! Bundle directory format: `edges.txt`, `features.txt`, `labels.txt`,
//! `splits.txt`.
//!
//! - `edges.txt`: first line `n m`, then `m` lines `u v` with `u < v`, each
//!   undirected edge listed once.
//! - `features.txt`: first line `n dim`, then `n` lines of space-separated
//!   `idx:value` pairs with strictly increasing `idx`; an empty line is a
//!   zero row.
//! - `labels.txt`: `n` lines, one integer each.
//! - `splits.txt`: `n` lines, each `train`, `val` or `test`.
//!
//! All files are UTF-8 with LF line endings and `.` as the decimal separator.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{FeatureKind, GraphBundle, Split};
use crate::sparse::SparseRowMatrix;

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Retain only the largest connected component (default on).
    pub largest_component: bool,
    /// Treat feature values as binary. When unset, the kind is inferred:
    /// binary iff every stored value equals 1.
    pub feature_kind: Option<FeatureKind>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            largest_component: true,
            feature_kind: None,
        }
    }
}

/// Load a bundle directory with default options.
pub fn load_bundle(dir: &Path) -> Result<GraphBundle> {
    load_bundle_with(dir, &LoadOptions::default())
}

pub fn load_bundle_with(dir: &Path, opts: &LoadOptions) -> Result<GraphBundle> {
    let (n, edges) = read_edges(&dir.join("edges.txt"))?;
    let (dim, feature_rows) = read_features(&dir.join("features.txt"), n)?;
    let labels = read_labels(&dir.join("labels.txt"), n)?;
    let split = read_splits(&dir.join("splits.txt"), n)?;

    let (n, edges, feature_rows, labels, split) = if opts.largest_component {
        restrict_to_largest_component(n, edges, feature_rows, labels, split)
    } else {
        (n, edges, feature_rows, labels, split)
    };

    let kind = opts
        .feature_kind
        .unwrap_or_else(|| infer_kind(&feature_rows));
    let mut features = SparseRowMatrix::with_cols(dim);
    for row in feature_rows {
        features.push_row(&row)?;
    }
    GraphBundle::from_edges(n, &edges, features, labels, split, None, kind)
}

fn infer_kind(rows: &[Vec<(usize, f64)>]) -> FeatureKind {
    let all_unit = rows.iter().flatten().all(|&(_, v)| v == 1.0);
    if all_unit {
        FeatureKind::Binary
    } else {
        FeatureKind::Continuous
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        msg: msg.into(),
    }
}

fn read_edges(path: &Path) -> Result<(usize, Vec<(usize, usize)>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing 'n m' header"))?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "bad node count"))?;
    let m: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "bad edge count"))?;

    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let u: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, lineno, "bad endpoint"))?;
        let v: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, lineno, "bad endpoint"))?;
        if it.next().is_some() {
            return Err(parse_err(path, lineno, "trailing tokens on edge line"));
        }
        if u >= v {
            return Err(Error::validation(format!(
                "{}:{lineno}: edge ({u}, {v}) not in canonical order u < v; \
                 each undirected edge must be listed once",
                path.display()
            )));
        }
        if v >= n {
            return Err(Error::validation(format!(
                "{}:{lineno}: edge ({u}, {v}) out of range (n={n})",
                path.display()
            )));
        }
        if !seen.insert((u, v)) {
            return Err(Error::validation(format!(
                "{}:{lineno}: duplicate edge ({u}, {v})",
                path.display()
            )));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::validation(format!(
            "{}: header declares {m} edges, found {}",
            path.display(),
            edges.len()
        )));
    }
    Ok((n, edges))
}

fn read_features(path: &Path, n: usize) -> Result<(usize, Vec<Vec<(usize, f64)>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing 'n dim' header"))?;
    let mut it = header.split_whitespace();
    let rows: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "bad row count"))?;
    let dim: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "bad feature dim"))?;
    if rows != n {
        return Err(Error::validation(format!(
            "{}: feature rows {rows} != node count {n}",
            path.display()
        )));
    }

    let mut out = Vec::with_capacity(n);
    for (i, line) in lines {
        let lineno = i + 1;
        if out.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(path, lineno, "more feature rows than declared"));
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                parse_err(path, lineno, format!("expected idx:value, got '{tok}'"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature value '{val}'")))?;
            row.push((idx, val));
        }
        out.push(row);
    }
    if out.len() != n {
        return Err(Error::validation(format!(
            "{}: expected {n} feature rows, found {}",
            path.display(),
            out.len()
        )));
    }
    Ok((dim, out))
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let label: usize = line
            .trim()
            .parse()
            .map_err(|_| parse_err(path, i + 1, format!("bad label '{}'", line.trim())))?;
        labels.push(label);
    }
    if labels.len() != n {
        return Err(Error::validation(format!(
            "{}: expected {n} labels, found {}",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

fn read_splits(path: &Path, n: usize) -> Result<Vec<Split>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tag = Split::parse(line.trim())
            .ok_or_else(|| parse_err(path, i + 1, format!("bad split tag '{}'", line.trim())))?;
        out.push(tag);
    }
    if out.len() != n {
        return Err(Error::validation(format!(
            "{}: expected {n} split tags, found {}",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

type RawParts = (
    usize,
    Vec<(usize, usize)>,
    Vec<Vec<(usize, f64)>>,
    Vec<usize>,
    Vec<Split>,
);

fn restrict_to_largest_component(
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Vec<Vec<(usize, f64)>>,
    labels: Vec<usize>,
    split: Vec<Split>,
) -> RawParts {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0usize;
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &u in &adj[v] {
                if component[u] == usize::MAX {
                    component[u] = id;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    // Largest component; ties resolve to the one discovered first (lowest
    // minimum node id).
    let keep = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _)| id)
        .unwrap_or(0);

    let mut remap = vec![usize::MAX; n];
    let mut kept = 0usize;
    for v in 0..n {
        if component[v] == keep {
            remap[v] = kept;
            kept += 1;
        }
    }
    let edges = edges
        .into_iter()
        .filter(|&(u, v)| component[u] == keep && component[v] == keep)
        .map(|(u, v)| (remap[u], remap[v]))
        .collect();
    let features = features
        .into_iter()
        .enumerate()
        .filter(|(v, _)| component[*v] == keep)
        .map(|(_, row)| row)
        .collect();
    let labels = labels
        .into_iter()
        .enumerate()
        .filter(|(v, _)| component[*v] == keep)
        .map(|(_, l)| l)
        .collect();
    let split = split
        .into_iter()
        .enumerate()
        .filter(|(v, _)| component[*v] == keep)
        .map(|(_, s)| s)
        .collect();
    (kept, edges, features, labels, split)
}

/// Write a bundle as a directory in the canonical format.
pub fn save_bundle(g: &GraphBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut edges = String::new();
    edges.push_str(&format!("{} {}\n", g.n(), g.m()));
    for v in 0..g.n() {
        for &u in g.neighbors(v) {
            if v < u {
                edges.push_str(&format!("{v} {u}\n"));
            }
        }
    }
    fs::write(dir.join("edges.txt"), edges)?;

    let mut features = String::new();
    features.push_str(&format!("{} {}\n", g.n(), g.dim()));
    for v in 0..g.n() {
        let (idx, vals) = g.features().row(v);
        let mut first = true;
        for (&k, &x) in idx.iter().zip(vals) {
            if !first {
                features.push(' ');
            }
            features.push_str(&format!("{k}:{x}"));
            first = false;
        }
        features.push('\n');
    }
    fs::write(dir.join("features.txt"), features)?;

    let mut labels = String::new();
    for v in 0..g.n() {
        labels.push_str(&format!("{}\n", g.label(v)));
    }
    fs::write(dir.join("labels.txt"), labels)?;

    let mut splits = String::new();
    for v in 0..g.n() {
        splits.push_str(g.split(v).as_str());
        splits.push('\n');
    }
    fs::write(dir.join("splits.txt"), splits)?;
    Ok(())
}
