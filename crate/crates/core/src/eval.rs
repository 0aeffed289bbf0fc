//! Evasion and poisoning evaluation of victim models on clean versus
//! perturbed graphs.
//!
//! Evasion trains the victim on the clean graph and only swaps the graph at
//! test time; poisoning retrains on the perturbed graph with the original
//! labels (injected nodes stay unlabeled and outside every mask). Accuracy
//! is always measured on the original test nodes.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphBundle, GraphView, PerturbedGraph, Split};
use crate::injector::InjectionPlan;
use crate::propagation::smooth;
use crate::scoring::{mean_similarity, target_labels};
use crate::seed::derive_seed;
use crate::surrogate::{gcn_forward, train_bundle, train_masked, TrainConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    Evasion,
    Poisoning,
}

impl AttackMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMode::Evasion => "evasion",
            AttackMode::Poisoning => "poisoning",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "evasion" => Some(AttackMode::Evasion),
            "poisoning" => Some(AttackMode::Poisoning),
            _ => None,
        }
    }
}

/// Derive the per-run training seeds used when a caller gives only a base
/// seed and a count.
pub fn derive_eval_seeds(base: u64, count: usize) -> Vec<u64> {
    const TAG_EVAL_BASE: u64 = 3 << 32;
    (0..count)
        .map(|i| derive_seed(base, TAG_EVAL_BASE + i as u64))
        .collect()
}

/// Fraction of masked nodes whose prediction matches the truth.
pub fn accuracy(pred: &[usize], truth: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let hits = mask.iter().filter(|&&v| pred[v] == truth[v]).count();
    hits as f64 / mask.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub clean_acc: f64,
    pub attacked_acc: f64,
    /// Set when training failed for this seed; accuracies are then 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: AttackMode,
    pub victim: Variant,
    /// Mean over successful seeds.
    pub clean_acc: f64,
    pub attacked_acc: f64,
    /// `clean_acc - attacked_acc`.
    pub drop: f64,
    pub n_fake: usize,
    pub edge_total: usize,
    pub seeds_used: Vec<u64>,
    pub per_seed: Vec<SeedOutcome>,
    /// Mean target-label similarity on the clean graph.
    pub homophily_before: f64,
    /// Same statistic on the perturbed graph (original nodes).
    pub homophily_after: f64,
}

/// Evaluate one plan against one victim in one mode, averaged over training
/// seeds. Failed seeds are recorded and skipped in the averages.
pub fn evaluate(
    g: &GraphBundle,
    plan: &InjectionPlan,
    mode: AttackMode,
    victim: Variant,
    seeds: &[u64],
    train_cfg: &TrainConfig,
) -> Result<EvalReport> {
    if seeds.is_empty() {
        return Err(Error::config("seed list must not be empty"));
    }
    let perturbed = PerturbedGraph::materialize(plan, g)?;
    let test_mask = g.split_mask(Split::Test);

    let per_seed: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(
            |&seed| match run_seed(g, &perturbed, mode, victim, seed, train_cfg, &test_mask) {
                Ok((clean, attacked)) => SeedOutcome {
                    seed,
                    clean_acc: clean,
                    attacked_acc: attacked,
                    error: None,
                },
                Err(e) => SeedOutcome {
                    seed,
                    clean_acc: 0.0,
                    attacked_acc: 0.0,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();

    let ok: Vec<&SeedOutcome> = per_seed.iter().filter(|o| o.error.is_none()).collect();
    if ok.is_empty() {
        return Err(Error::Training(format!(
            "all {} evaluation seeds failed; first error: {}",
            seeds.len(),
            per_seed[0].error.as_deref().unwrap_or("unknown")
        )));
    }
    let clean_acc = ok.iter().map(|o| o.clean_acc).sum::<f64>() / ok.len() as f64;
    let attacked_acc = ok.iter().map(|o| o.attacked_acc).sum::<f64>() / ok.len() as f64;

    // Derive the homophily statistics from the first seed that trained.
    let (homophily_before, homophily_after) =
        homophily_stats(g, &perturbed, victim, ok[0].seed, train_cfg)?;

    Ok(EvalReport {
        mode,
        victim,
        clean_acc,
        attacked_acc,
        drop: clean_acc - attacked_acc,
        n_fake: plan.fakes.len(),
        edge_total: perturbed.total_fake_edges(),
        seeds_used: seeds.to_vec(),
        per_seed,
        homophily_before,
        homophily_after,
    })
}

fn run_seed(
    g: &GraphBundle,
    perturbed: &PerturbedGraph<'_>,
    mode: AttackMode,
    victim: Variant,
    seed: u64,
    train_cfg: &TrainConfig,
    test_mask: &[usize],
) -> Result<(f64, f64)> {
    let clean_params = train_bundle(g, victim, train_cfg, seed)?;
    let clean_pred = gcn_forward(&clean_params, g)?.argmax_rows();
    let clean_acc = accuracy(&clean_pred, g.labels(), test_mask);

    let attacked_acc = match mode {
        AttackMode::Evasion => {
            let z = gcn_forward(&clean_params, perturbed)?;
            accuracy(&z.argmax_rows(), g.labels(), test_mask)
        }
        AttackMode::Poisoning => {
            let poisoned = train_masked(
                perturbed,
                g.labels(),
                g.num_classes(),
                &g.split_mask(Split::Train),
                &g.split_mask(Split::Val),
                victim,
                train_cfg,
                seed,
            )?;
            let z = gcn_forward(&poisoned, perturbed)?;
            accuracy(&z.argmax_rows(), g.labels(), test_mask)
        }
    };
    Ok((clean_acc, attacked_acc))
}

/// Mean target-label similarity before/after the perturbation, derived from
/// a model trained at the first evaluation seed.
fn homophily_stats(
    g: &GraphBundle,
    perturbed: &PerturbedGraph<'_>,
    victim: Variant,
    seed: u64,
    train_cfg: &TrainConfig,
) -> Result<(f64, f64)> {
    let params = train_bundle(g, victim, train_cfg, seed)?;

    let z_clean = gcn_forward(&params, g)?;
    let smooth_clean = smooth(g, &z_clean, 0.9, 50, 1e-8)?;
    let c_b_clean = target_labels(&smooth_clean, &z_clean.argmax_rows())?;
    let before = mean_similarity(g, &c_b_clean);

    let z_pert = gcn_forward(&params, perturbed)?;
    let smooth_pert = smooth(perturbed, &z_pert, 0.9, 50, 1e-8)?;
    let c_b_pert = target_labels(&smooth_pert, &z_pert.argmax_rows())?;
    // Only original nodes enter the statistic.
    let h = crate::scoring::similarity(perturbed, &c_b_pert);
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in 0..g.n() {
        if perturbed.degree(v) > 0 {
            sum += h[v];
            count += 1;
        }
    }
    let after = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok((before, after))
}

/// CSV summary, one row per report. Stable column order:
/// `strategy,victim,mode,clean_acc,attacked_acc,drop,n_fake,edge_total,seeds`.
pub fn reports_to_csv(rows: &[(String, &EvalReport)]) -> String {
    let mut out =
        String::from("strategy,victim,mode,clean_acc,attacked_acc,drop,n_fake,edge_total,seeds\n");
    for (strategy, report) in rows {
        writeln!(
            out,
            "{strategy},{},{},{:.6},{:.6},{:.6},{},{},{}",
            report.victim.as_str(),
            report.mode.as_str(),
            report.clean_acc,
            report.attacked_acc,
            report.drop,
            report.n_fake,
            report.edge_total,
            report.seeds_used.len()
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_csbm, CsbmParams};
    use crate::injector::{run_attack, AttackConfig};
    use crate::surrogate::build_ensemble;

    #[test]
    fn accuracy_extremes() {
        let truth = vec![0, 1, 0, 1];
        let mask: Vec<usize> = (0..4).collect();
        assert_eq!(accuracy(&truth.clone(), &truth, &mask), 1.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &truth, &mask), 0.0);
        let half: Vec<usize> = vec![0, 1, 1, 0];
        assert_eq!(accuracy(&half, &truth, &mask), 0.5);
    }

    #[test]
    fn empty_plan_keeps_accuracy_identical_per_seed() {
        let g = gen_csbm(&CsbmParams {
            n: 70,
            num_classes: 2,
            dim: 12,
            p_in: 0.2,
            p_out: 0.02,
            mu: 1.5,
            seed: 9,
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let ensemble = build_ensemble(&g, Variant::Gcn, 1, &cfg, 9).unwrap();
        let plan = run_attack(
            &g,
            &ensemble,
            &AttackConfig {
                n_fake: 0,
                ..AttackConfig::default()
            },
        )
        .unwrap();
        for mode in [AttackMode::Evasion, AttackMode::Poisoning] {
            let report = evaluate(&g, &plan, mode, Variant::Gcn, &[1, 2], &cfg).unwrap();
            for outcome in &report.per_seed {
                assert!(outcome.error.is_none());
                assert_eq!(outcome.clean_acc, outcome.attacked_acc);
            }
            assert_eq!(report.drop, 0.0);
        }
    }

    #[test]
    fn report_is_deterministic() {
        let g = gen_csbm(&CsbmParams {
            n: 70,
            num_classes: 2,
            dim: 12,
            p_in: 0.2,
            p_out: 0.02,
            mu: 1.5,
            seed: 10,
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let ensemble = build_ensemble(&g, Variant::Gcn, 1, &cfg, 10).unwrap();
        let plan = run_attack(
            &g,
            &ensemble,
            &AttackConfig {
                n_fake: 3,
                ensemble_size: 1,
                seed: 10,
                ..AttackConfig::default()
            },
        )
        .unwrap();
        let a = evaluate(&g, &plan, AttackMode::Evasion, Variant::Gcn, &[5, 6], &cfg).unwrap();
        let b = evaluate(&g, &plan, AttackMode::Evasion, Variant::Gcn, &[5, 6], &cfg).unwrap();
        assert_eq!(a, b);
        let csv_a = reports_to_csv(&[("ours,ours,ours".into(), &a)]);
        let csv_b = reports_to_csv(&[("ours,ours,ours".into(), &b)]);
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn csv_has_stable_header() {
        let csv = reports_to_csv(&[]);
        assert_eq!(
            csv,
            "strategy,victim,mode,clean_acc,attacked_acc,drop,n_fake,edge_total,seeds\n"
        );
    }
}
