//! Two-layer GCN / SGC surrogate models: forward pass, from-scratch training
//! with hand-derived backprop, ensembles, and a textual checkpoint format.
//!
//! The forward pass is
//!
//! ```text
//! Z = softmax(S sigma(S X W1) W2),   S = D~^{-1/2} (A + I) D~^{-1/2}
//! ```
//!
//! with `sigma = relu` for the GCN variant and the identity for SGC (so the
//! SGC output equals `softmax(S^2 X (W1 W2))`). Training minimizes the mean
//! cross-entropy over the train split plus an L2 penalty
//! `0.5 * weight_decay * (|W1|^2 + |W2|^2)` by plain gradient descent, with
//! early stopping on validation accuracy.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{sym_norm_propagate_self_loops, GraphBundle, GraphView, Split};
use crate::propagation::{ProbKind, ProbMatrix};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gcn,
    Sgc,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Gcn => "gcn",
            Variant::Sgc => "sgc",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "gcn" => Some(Variant::Gcn),
            "sgc" => Some(Variant::Sgc),
            _ => None,
        }
    }
}

/// Trained two-layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub variant: Variant,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

impl GcnParams {
    pub fn dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.cols()
    }

    /// `W1 * W2`: the feature-to-class map with the nonlinearity dropped.
    pub fn linearized(&self) -> DenseMatrix {
        self.w1.matmul(&self.w2)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 200,
            // Plain momentum-free descent on the mean cross-entropy needs a
            // far larger step than the adaptive-optimizer regime.
            learning_rate: 0.5,
            weight_decay: 5e-4,
            patience: 30,
        }
    }
}

/// Full forward pass returning the row-stochastic prediction matrix.
pub fn gcn_forward(params: &GcnParams, g: &impl GraphView) -> Result<ProbMatrix> {
    let pass = forward_pass(params, g)?;
    Ok(pass.z)
}

struct ForwardPass {
    /// `S X W1` before the activation.
    pre_act: DenseMatrix,
    /// Activated hidden features.
    hidden: DenseMatrix,
    z: ProbMatrix,
}

fn forward_pass(params: &GcnParams, g: &impl GraphView) -> Result<ForwardPass> {
    let n = g.num_nodes();
    if g.feature_dim() != params.dim() {
        return Err(Error::validation(format!(
            "graph dim {} != model dim {}",
            g.feature_dim(),
            params.dim()
        )));
    }
    // X W1 via the sparse rows, then one propagation hop.
    let mut xw = DenseMatrix::zeros(n, params.hidden());
    for v in 0..n {
        let (idx, vals) = g.feature_row(v);
        let row = xw.row_mut(v);
        for (&k, &x) in idx.iter().zip(vals) {
            for (j, &w) in params.w1.row(k).iter().enumerate() {
                row[j] += x * w;
            }
        }
    }
    let pre_act = DenseMatrix::from_vec(
        n,
        params.hidden(),
        sym_norm_propagate_self_loops(g, params.hidden(), xw.data()),
    );
    let mut hidden = pre_act.clone();
    if params.variant == Variant::Gcn {
        for v in hidden.data_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    let hw = hidden.matmul(&params.w2);
    let logits = DenseMatrix::from_vec(
        n,
        params.num_classes(),
        sym_norm_propagate_self_loops(g, params.num_classes(), hw.data()),
    );
    if !logits.is_finite() {
        return Err(Error::Training(
            "non-finite activations in forward pass".into(),
        ));
    }
    let z = softmax_rows(&logits);
    Ok(ForwardPass { pre_act, hidden, z })
}

fn softmax_rows(logits: &DenseMatrix) -> ProbMatrix {
    let classes = logits.cols();
    let mut data = Vec::with_capacity(logits.rows() * classes);
    for v in 0..logits.rows() {
        let row = logits.row(v);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        data.extend(exps.iter().map(|&e| e / sum));
    }
    ProbMatrix::from_data(ProbKind::RawSoftmax, classes, data)
}

/// Mean train-split cross-entropy plus the L2 penalty; the quantity the
/// trainer descends and the finite-difference oracle probes.
pub fn training_loss(
    params: &GcnParams,
    g: &impl GraphView,
    labels: &[usize],
    train_mask: &[usize],
    weight_decay: f64,
) -> Result<f64> {
    if train_mask.is_empty() {
        return Err(Error::config("empty train split"));
    }
    let pass = forward_pass(params, g)?;
    let mut ce = 0.0;
    for &v in train_mask {
        ce -= pass.z.row(v)[labels[v]].max(f64::MIN_POSITIVE).ln();
    }
    ce /= train_mask.len() as f64;
    Ok(ce + 0.5 * weight_decay * (params.w1.frobenius_sq() + params.w2.frobenius_sq()))
}

/// Analytic gradients of [`training_loss`] with respect to both weight
/// matrices.
pub fn loss_gradients(
    params: &GcnParams,
    g: &impl GraphView,
    labels: &[usize],
    train_mask: &[usize],
    weight_decay: f64,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    if train_mask.is_empty() {
        return Err(Error::config("empty train split"));
    }
    let n = g.num_nodes();
    let classes = params.num_classes();
    let pass = forward_pass(params, g)?;

    let mut ce = 0.0;
    for &v in train_mask {
        ce -= pass.z.row(v)[labels[v]].max(f64::MIN_POSITIVE).ln();
    }
    ce /= train_mask.len() as f64;
    let loss = ce + 0.5 * weight_decay * (params.w1.frobenius_sq() + params.w2.frobenius_sq());

    // d loss / d logits = (Z - Y) / |train| on train rows, 0 elsewhere.
    let mut d_logits = DenseMatrix::zeros(n, classes);
    let scale = 1.0 / train_mask.len() as f64;
    for &v in train_mask {
        let z_row = pass.z.row(v);
        let d_row = d_logits.row_mut(v);
        for c in 0..classes {
            d_row[c] = scale * (z_row[c] - f64::from(u8::from(labels[v] == c)));
        }
    }
    // Back through the second propagation (S is symmetric).
    let d_hw = DenseMatrix::from_vec(
        n,
        classes,
        sym_norm_propagate_self_loops(g, classes, d_logits.data()),
    );
    let mut d_w2 = pass.hidden.transpose_matmul(&d_hw);
    d_w2.add_scaled(&params.w2, weight_decay);

    let mut d_hidden = d_hw.matmul(&transpose(&params.w2));
    if params.variant == Variant::Gcn {
        for (dv, &pre) in d_hidden.data_mut().iter_mut().zip(pass.pre_act.data()) {
            if pre <= 0.0 {
                *dv = 0.0;
            }
        }
    }
    // Back through the first propagation, then through X.
    let d_xw = DenseMatrix::from_vec(
        n,
        params.hidden(),
        sym_norm_propagate_self_loops(g, params.hidden(), d_hidden.data()),
    );
    let mut d_w1 = DenseMatrix::zeros(params.dim(), params.hidden());
    for v in 0..n {
        let (idx, vals) = g.feature_row(v);
        let g_row = d_xw.row(v);
        for (&k, &x) in idx.iter().zip(vals) {
            let out_row = d_w1.row_mut(k);
            for (j, &gv) in g_row.iter().enumerate() {
                out_row[j] += x * gv;
            }
        }
    }
    d_w1.add_scaled(&params.w1, weight_decay);
    Ok((loss, d_w1, d_w2))
}

fn transpose(m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.cols(), m.rows());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.set(c, r, m.get(r, c));
        }
    }
    out
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random::<f64>() * 2.0 * bound - bound)
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

/// Train on an arbitrary graph view with explicit label and mask vectors.
/// Nodes absent from both masks (e.g. injected ones) never enter the loss.
pub fn train_masked(
    g: &impl GraphView,
    labels: &[usize],
    num_classes: usize,
    train_mask: &[usize],
    val_mask: &[usize],
    variant: Variant,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<GcnParams> {
    if train_mask.is_empty() {
        return Err(Error::config("empty train split"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut params = GcnParams {
        variant,
        w1: glorot(g.feature_dim(), cfg.hidden, &mut rng),
        w2: glorot(cfg.hidden, num_classes, &mut rng),
    };

    let mut best: Option<(f64, GcnParams)> = None;
    let mut stale = 0usize;
    for epoch in 0..cfg.epochs {
        let (loss, d_w1, d_w2) = loss_gradients(&params, g, labels, train_mask, cfg.weight_decay)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss diverged at epoch {epoch} (seed={seed}, lr={})",
                cfg.learning_rate
            )));
        }
        params.w1.add_scaled(&d_w1, -cfg.learning_rate);
        params.w2.add_scaled(&d_w2, -cfg.learning_rate);

        if !val_mask.is_empty() {
            let z = gcn_forward(&params, g)?;
            let pred = z.argmax_rows();
            let acc = mask_accuracy(&pred, labels, val_mask);
            match &best {
                Some((best_acc, _)) if acc <= *best_acc => {
                    stale += 1;
                    if stale > cfg.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((acc, params.clone()));
                    stale = 0;
                }
            }
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or(params))
}

fn mask_accuracy(pred: &[usize], truth: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let hits = mask.iter().filter(|&&v| pred[v] == truth[v]).count();
    hits as f64 / mask.len() as f64
}

/// Train on a bundle using its stored split.
pub fn train_bundle(
    g: &GraphBundle,
    variant: Variant,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<GcnParams> {
    train_masked(
        g,
        g.labels(),
        g.num_classes(),
        &g.split_mask(Split::Train),
        &g.split_mask(Split::Val),
        variant,
        cfg,
        seed,
    )
}

/// Trained surrogate runs plus the averaged linearized weights.
#[derive(Debug, Clone)]
pub struct SurrogateEnsemble {
    pub members: Vec<GcnParams>,
    /// Elementwise mean over members of `W1 * W2`.
    pub w_bar: DenseMatrix,
    /// Prediction of member 0 on the clean graph.
    pub z0: ProbMatrix,
}

/// Train `count` surrogates with derived seeds and average their
/// linearizations.
pub fn build_ensemble(
    g: &GraphBundle,
    variant: Variant,
    count: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SurrogateEnsemble> {
    if count == 0 {
        return Err(Error::config("ensemble needs at least one member"));
    }
    let members: Vec<GcnParams> = (0..count)
        .into_par_iter()
        .map(|i| train_bundle(g, variant, cfg, derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let mut w_bar = DenseMatrix::zeros(g.dim(), g.num_classes());
    for member in &members {
        w_bar.add_scaled(&member.linearized(), 1.0 / count as f64);
    }
    let z0 = gcn_forward(&members[0], g)?;
    Ok(SurrogateEnsemble { members, w_bar, z0 })
}

/// Checkpoint format (`lpgia-checkpoint v1`): a small text header followed by
/// row-major weight dumps, one matrix row per line. Values use the shortest
/// decimal form that round-trips exactly, so save/load is lossless.
pub fn save_checkpoint(params: &GcnParams, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "lpgia-checkpoint v1").unwrap();
    writeln!(out, "variant {}", params.variant.as_str()).unwrap();
    writeln!(out, "dim {}", params.dim()).unwrap();
    writeln!(out, "hidden {}", params.hidden()).unwrap();
    writeln!(out, "classes {}", params.num_classes()).unwrap();
    for (name, m) in [("w1", &params.w1), ("w2", &params.w2)] {
        writeln!(out, "{name}").unwrap();
        for r in 0..m.rows() {
            let line: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<GcnParams> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String)> {
        let (i, line) = lines.next().ok_or_else(|| {
            Error::validation(format!("{}: truncated checkpoint", path.display()))
        })?;
        if !expect.is_empty() && !line.starts_with(expect) {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("expected '{expect}', got '{line}'"),
            });
        }
        Ok((i + 1, line.to_string()))
    };
    next("lpgia-checkpoint v1")?;
    let (line_no, variant_line) = next("variant ")?;
    let variant =
        Variant::parse(variant_line.trim_start_matches("variant ").trim()).ok_or_else(|| {
            Error::Parse {
                path: path.into(),
                line: line_no,
                msg: "unknown variant".into(),
            }
        })?;
    let parse_count = |line: (usize, String), key: &str| -> Result<usize> {
        line.1
            .trim_start_matches(key)
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                path: path.into(),
                line: line.0,
                msg: format!("bad {key}"),
            })
    };
    let dim = parse_count(next("dim ")?, "dim ")?;
    let hidden = parse_count(next("hidden ")?, "hidden ")?;
    let classes = parse_count(next("classes ")?, "classes ")?;

    let mut read_matrix = |name: &str, rows: usize, cols: usize| -> Result<DenseMatrix> {
        next(name)?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line_no, line) = next("")?;
            for tok in line.split_whitespace() {
                data.push(tok.parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: line_no,
                    msg: format!("bad value '{tok}'"),
                })?);
            }
        }
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "{}: {name} has {} values, expected {}",
                path.display(),
                data.len(),
                rows * cols
            )));
        }
        Ok(DenseMatrix::from_vec(rows, cols, data))
    };
    let w1 = read_matrix("w1", dim, hidden)?;
    let w2 = read_matrix("w2", hidden, classes)?;
    Ok(GcnParams { variant, w1, w2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_csbm, CsbmParams, FeatureKind};
    use crate::sparse::SparseRowMatrix;

    fn small_bundle() -> GraphBundle {
        let features = SparseRowMatrix::from_rows(
            3,
            vec![
                vec![(0, 1.0)],
                vec![(1, 1.0)],
                vec![(0, 1.0), (2, 1.0)],
                vec![(2, 1.0)],
            ],
        )
        .unwrap();
        GraphBundle::from_edges(
            4,
            &[(0, 1), (1, 2), (2, 3), (0, 3)],
            features,
            vec![0, 1, 0, 1],
            vec![Split::Train, Split::Train, Split::Val, Split::Test],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap()
    }

    fn random_params(variant: Variant, dim: usize, hidden: usize, classes: usize) -> GcnParams {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        GcnParams {
            variant,
            w1: glorot(dim, hidden, &mut rng),
            w2: glorot(hidden, classes, &mut rng),
        }
    }

    #[test]
    fn forward_rows_sum_to_one() {
        let g = small_bundle();
        let params = random_params(Variant::Gcn, 3, 5, 2);
        let z = gcn_forward(&params, &g).unwrap();
        for v in 0..g.n() {
            let sum: f64 = z.row(v).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_weights_give_uniform_rows() {
        let g = small_bundle();
        let params = GcnParams {
            variant: Variant::Gcn,
            w1: DenseMatrix::zeros(3, 4),
            w2: DenseMatrix::zeros(4, 2),
        };
        let z = gcn_forward(&params, &g).unwrap();
        for v in 0..g.n() {
            for &p in z.row(v) {
                assert!((p - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isolated_node_sees_only_its_own_feature() {
        // Node 2 is isolated; its renormalized row is the self-loop alone.
        let features = SparseRowMatrix::from_rows(
            2,
            vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(0, 1.0), (1, 1.0)]],
        )
        .unwrap();
        let g = GraphBundle::from_edges(
            3,
            &[(0, 1)],
            features,
            vec![0, 1, 0],
            vec![Split::Train, Split::Train, Split::Test],
            Some(2),
            FeatureKind::Binary,
        )
        .unwrap();
        let params = random_params(Variant::Gcn, 2, 4, 2);
        let z = gcn_forward(&params, &g).unwrap();

        // By hand: softmax(relu(x W1) W2) for x = [1, 1].
        let mut h = vec![0.0; 4];
        for k in 0..2 {
            for j in 0..4 {
                h[j] += params.w1.get(k, j);
            }
        }
        for v in &mut h {
            *v = v.max(0.0);
        }
        let mut logits = [0.0; 2];
        for (j, &hv) in h.iter().enumerate() {
            for c in 0..2 {
                logits[c] += hv * params.w2.get(j, c);
            }
        }
        let max = logits[0].max(logits[1]);
        let e: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
        let sum = e[0] + e[1];
        assert!((z.row(2)[0] - e[0] / sum).abs() < 1e-12);
        assert!((z.row(2)[1] - e[1] / sum).abs() < 1e-12);
    }

    #[test]
    fn sgc_forward_equals_linearized_form() {
        let g = small_bundle();
        let params = random_params(Variant::Sgc, 3, 5, 2);
        let z = gcn_forward(&params, &g).unwrap();

        // softmax(S^2 X (W1 W2)) computed along the other association order.
        let w = params.linearized();
        let xw = {
            let mut out = DenseMatrix::zeros(g.n(), 2);
            for v in 0..g.n() {
                let (idx, vals) = g.feature_row(v);
                for (&k, &x) in idx.iter().zip(vals) {
                    for c in 0..2 {
                        let cur = out.get(v, c);
                        out.set(v, c, cur + x * w.get(k, c));
                    }
                }
            }
            out
        };
        let once = sym_norm_propagate_self_loops(&g, 2, xw.data());
        let twice = sym_norm_propagate_self_loops(&g, 2, &once);
        let reference = softmax_rows(&DenseMatrix::from_vec(g.n(), 2, twice));
        assert!(z.max_abs_diff(&reference) < 1e-10);
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let g = small_bundle();
        let cfg = TrainConfig {
            epochs: 40,
            ..TrainConfig::default()
        };
        let a = train_bundle(&g, Variant::Gcn, &cfg, 5).unwrap();
        let b = train_bundle(&g, Variant::Gcn, &cfg, 5).unwrap();
        assert_eq!(a, b);
        let c = train_bundle(&g, Variant::Gcn, &cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn separable_csbm_reaches_full_train_accuracy() {
        let g = gen_csbm(&CsbmParams {
            n: 100,
            num_classes: 2,
            dim: 16,
            p_in: 0.15,
            p_out: 0.01,
            mu: 3.0,
            seed: 17,
        })
        .unwrap();
        let params = train_bundle(&g, Variant::Gcn, &TrainConfig::default(), 1).unwrap();
        let z = gcn_forward(&params, &g).unwrap();
        let pred = z.argmax_rows();
        let train_acc = mask_accuracy(&pred, g.labels(), &g.split_mask(Split::Train));
        assert_eq!(train_acc, 1.0, "train accuracy {train_acc}");
        // Well above chance + 0.3.
        let test_acc = mask_accuracy(&pred, g.labels(), &g.split_mask(Split::Test));
        assert!(test_acc > 0.5 + 0.3, "test accuracy {test_acc}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = small_bundle();
        let labels = g.labels().to_vec();
        let train = g.split_mask(Split::Train);
        for variant in [Variant::Gcn, Variant::Sgc] {
            let params = random_params(variant, 3, 4, 2);
            let (_, d_w1, d_w2) = loss_gradients(&params, &g, &labels, &train, 5e-4).unwrap();
            let h = 1e-6;
            for (which, analytic) in [(0, &d_w1), (1, &d_w2)] {
                let m = if which == 0 { &params.w1 } else { &params.w2 };
                for r in 0..m.rows() {
                    for c in 0..m.cols() {
                        let mut plus = params.clone();
                        let mut minus = params.clone();
                        {
                            let target = if which == 0 {
                                &mut plus.w1
                            } else {
                                &mut plus.w2
                            };
                            target.set(r, c, target.get(r, c) + h);
                        }
                        {
                            let target = if which == 0 {
                                &mut minus.w1
                            } else {
                                &mut minus.w2
                            };
                            target.set(r, c, target.get(r, c) - h);
                        }
                        let fp = training_loss(&plus, &g, &labels, &train, 5e-4).unwrap();
                        let fm = training_loss(&minus, &g, &labels, &train, 5e-4).unwrap();
                        let fd = (fp - fm) / (2.0 * h);
                        let an = analytic.get(r, c);
                        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                        assert!(
                            rel <= 1e-4,
                            "variant {variant:?} w{} [{r},{c}]: fd={fd} analytic={an}",
                            which + 1
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ensemble_of_one_uses_single_linearization() {
        let g = small_bundle();
        let cfg = TrainConfig {
            epochs: 15,
            ..TrainConfig::default()
        };
        let ens = build_ensemble(&g, Variant::Gcn, 1, &cfg, 3).unwrap();
        assert_eq!(ens.members.len(), 1);
        assert!(ens.w_bar.max_abs_diff(&ens.members[0].linearized()) < 1e-15);
        assert_eq!(ens.w_bar.cols(), g.num_classes());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let params = random_params(Variant::Sgc, 5, 3, 4);
        let path = std::env::temp_dir().join(format!("lpgia-ckpt-{}.txt", std::process::id()));
        save_checkpoint(&params, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(params, loaded);
        std::fs::remove_file(&path).ok();
    }
}
