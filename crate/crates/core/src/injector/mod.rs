//! The attack proper: budget sampling, greedy victim-cluster derivation,
//! malicious-feature synthesis, and the sequential injection loop.

mod budget;
mod cluster;
mod features;

pub use budget::{sample_budgets, total_edge_budget};
pub use cluster::{
    aggregated_dist, cluster_score, derive_cluster, ClusterContext, DerivedCluster, SelectionPool,
};
pub use features::{
    element_values, feature_budget, generate_feature, most_frequent_feature, nonzero_counts,
    random_copy_feature,
};

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{ClusterStrategy, FeatureStrategy, NodeStrategy, StrategySpec};
use crate::error::{Error, Result};
use crate::graph::{GraphBundle, PerturbedGraph};
use crate::propagation::smooth;
use crate::scoring::{target_labels, NodeScores, VictimPool};
use crate::seed::derive_seed;
use crate::surrogate::{gcn_forward, SurrogateEnsemble};

/// Stream tags for the independent RNG draws of one attack run.
const TAG_BUDGET: u64 = 1;
const TAG_NODE_SCORE: u64 = 2;
const TAG_FEATURE_BASE: u64 = 1 << 32;
const TAG_CLUSTER_BASE: u64 = 2 << 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Number of nodes to inject.
    pub n_fake: usize,
    /// Label-propagation coefficient.
    pub alpha: f64,
    /// Propagation-score mix between the vulnerability and topological
    /// weights.
    pub beta: f64,
    /// Candidates retained per greedy step.
    pub n_k: usize,
    /// Surrogate runs averaged into the linearized weights.
    pub ensemble_size: usize,
    pub seed: u64,
    pub victim_pool: VictimPool,
    /// Re-predict and re-smooth after each injected node.
    pub recompute_smooth: bool,
    /// Derive target labels from the smoothed distribution (default) rather
    /// than the raw prediction.
    pub target_from_smoothed: bool,
    /// Smoothing iteration cap.
    pub max_iters: usize,
    /// Smoothing convergence tolerance.
    pub tol: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            n_fake: 0,
            alpha: 0.9,
            beta: 0.5,
            n_k: 10,
            ensemble_size: 20,
            seed: 0,
            victim_pool: VictimPool::NonTrain,
            recompute_smooth: true,
            target_from_smoothed: true,
            max_iters: 50,
            tol: 1e-8,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config(format!(
                "alpha={} outside [0, 1)",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!("beta={} outside [0, 1]", self.beta)));
        }
        if self.n_k < 1 {
            return Err(Error::config("n_k must be at least 1"));
        }
        if self.ensemble_size < 1 {
            return Err(Error::config("ensemble size must be at least 1"));
        }
        Ok(())
    }
}

/// One injected node of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakeNode {
    pub fake_id: usize,
    /// Sampled edge budget.
    pub budget: usize,
    pub pseudo_label: usize,
    /// Victims in selection order (seed first).
    pub victims: Vec<usize>,
    /// Sparse feature entries `[index, value]`, index-sorted.
    pub feature: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAudit {
    /// Total edge budget of the emitted fake nodes. Equals
    /// `floor(n_fake * avg_degree)` whenever the plan is complete.
    pub total_edges: usize,
    /// Non-zero feature budget per fake node.
    pub delta_x: usize,
    /// Fake ids whose cluster came up short of its budget.
    pub short_clusters: Vec<usize>,
    /// Fake ids left with an empty feature vector.
    pub empty_features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub fakes: Vec<FakeNode>,
    pub audit: PlanAudit,
}

impl InjectionPlan {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn total_victims(&self) -> usize {
        self.fakes.iter().map(|f| f.victims.len()).sum()
    }
}

/// Re-check every plan invariant against its bundle.
///
/// `stat_labels` supplies the label vector behind the element-statistic
/// table; pass it to also verify that every feature value equals the capped
/// statistic for its (pseudo label, index). Feature strategies that copy
/// original rows skip that check.
pub fn audit_plan(
    plan: &InjectionPlan,
    g: &GraphBundle,
    stat_labels: Option<&[usize]>,
) -> Result<()> {
    let budget_sum: usize = plan.fakes.iter().map(|f| f.budget).sum();
    if budget_sum != plan.audit.total_edges {
        return Err(Error::validation(format!(
            "budgets sum to {budget_sum}, audit says {}",
            plan.audit.total_edges
        )));
    }
    let delta_x = feature_budget(g);
    if plan.audit.delta_x != delta_x {
        return Err(Error::validation(format!(
            "audit delta_x {} != bundle delta_x {delta_x}",
            plan.audit.delta_x
        )));
    }
    let mut seen = vec![false; g.n()];
    let cap = g.value_cap();
    let stats = stat_labels.map(|labels| element_values(g, labels).0);
    for fake in &plan.fakes {
        if fake.victims.is_empty() {
            return Err(Error::validation(format!(
                "fake {} has no victims",
                fake.fake_id
            )));
        }
        if fake.victims.len() > fake.budget {
            return Err(Error::validation(format!(
                "fake {} exceeds its budget",
                fake.fake_id
            )));
        }
        if fake.victims.len() < fake.budget && !plan.audit.short_clusters.contains(&fake.fake_id) {
            return Err(Error::validation(format!(
                "fake {} is short of budget but not flagged",
                fake.fake_id
            )));
        }
        for &v in &fake.victims {
            if v >= g.n() {
                return Err(Error::validation(format!("victim {v} out of range")));
            }
            if seen[v] {
                return Err(Error::validation(format!("victim {v} repeated")));
            }
            seen[v] = true;
        }
        if fake.feature.len() > delta_x {
            return Err(Error::validation(format!(
                "fake {} holds {} non-zeros, budget is {delta_x}",
                fake.fake_id,
                fake.feature.len()
            )));
        }
        if fake.feature.is_empty() && !plan.audit.empty_features.contains(&fake.fake_id) {
            return Err(Error::validation(format!(
                "fake {} has an empty feature but is not flagged",
                fake.fake_id
            )));
        }
        for &(k, x) in &fake.feature {
            if x.abs() > cap + 1e-12 {
                return Err(Error::validation(format!(
                    "feature value {x} at index {k} exceeds cap {cap}"
                )));
            }
            if let Some(stats) = &stats {
                let expect = stats.get(fake.pseudo_label, k).min(cap);
                if (x - expect).abs() > 1e-12 {
                    return Err(Error::validation(format!(
                        "feature value {x} at ({}, {k}) differs from statistic {expect}",
                        fake.pseudo_label
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Run the full attack with the flagship strategy on every axis.
pub fn run_attack(
    g: &GraphBundle,
    ensemble: &SurrogateEnsemble,
    cfg: &AttackConfig,
) -> Result<InjectionPlan> {
    execute_attack(g, ensemble, cfg, &StrategySpec::ours())
}

/// Shared engine behind [`run_attack`] and the baseline strategies.
pub(crate) fn execute_attack(
    g: &GraphBundle,
    ensemble: &SurrogateEnsemble,
    cfg: &AttackConfig,
    strategy: &StrategySpec,
) -> Result<InjectionPlan> {
    cfg.validate()?;
    if ensemble.z0.rows() != g.n() {
        return Err(Error::validation(format!(
            "ensemble prediction rows {} != node count {}",
            ensemble.z0.rows(),
            g.n()
        )));
    }
    let delta_x = feature_budget(g);
    if cfg.n_fake == 0 {
        return Ok(InjectionPlan {
            fakes: Vec::new(),
            audit: PlanAudit {
                total_edges: 0,
                delta_x,
                short_clusters: Vec::new(),
                empty_features: Vec::new(),
            },
        });
    }

    let budgets = sample_budgets(g, cfg.n_fake, derive_seed(cfg.seed, TAG_BUDGET))?;
    let y = ensemble.z0.argmax_rows();
    let (raw_values, _absent) = element_values(g, &y);
    let cap = g.value_cap();
    let mut x_values = raw_values;
    for v in x_values.data_mut() {
        if *v > cap {
            *v = cap;
        }
    }
    let freq_counts = match strategy.feature {
        FeatureStrategy::MostFrequency => Some(nonzero_counts(g, &y)),
        _ => None,
    };

    let mut z_tilde = smooth(g, &ensemble.z0, cfg.alpha, cfg.max_iters, cfg.tol)?;
    let target_source = if cfg.target_from_smoothed {
        &z_tilde
    } else {
        &ensemble.z0
    };
    let c_b = target_labels(target_source, &y)?;
    let scores = NodeScores::compute(g, y, c_b, cfg.beta, cfg.victim_pool)?;

    let selection_score: Vec<f64> = match strategy.node {
        NodeStrategy::Ours => scores.s_h.clone(),
        NodeStrategy::Random => {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, TAG_NODE_SCORE));
            (0..g.n()).map(|_| rng.random::<f64>()).collect()
        }
        NodeStrategy::Degree => (0..g.n())
            .map(|v| {
                let d = g.degree(v);
                if d == 0 {
                    0.0
                } else {
                    1.0 / d as f64
                }
            })
            .collect(),
    };
    let mut candidates = scores.candidates.clone();
    candidates.sort_by(|&a, &b| {
        selection_score[b]
            .partial_cmp(&selection_score[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut pool = SelectionPool::new(g.n(), candidates, &scores.c_b);

    let degrees: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut perturbed = PerturbedGraph::new(g);
    let mut fakes: Vec<FakeNode> = Vec::with_capacity(cfg.n_fake);
    let mut short_clusters = Vec::new();
    let mut empty_features = Vec::new();

    for u in 0..cfg.n_fake {
        let budget = budgets[u];
        let derived = {
            let ctx = ClusterContext {
                z_tilde: &z_tilde,
                degrees: &degrees,
                target: &scores.c_b,
                score: &selection_score,
            };
            match strategy.cluster {
                ClusterStrategy::Ours => derive_cluster(&ctx, &mut pool, budget, cfg.n_k),
                ClusterStrategy::TopNodes => top_nodes_cluster(&ctx, &mut pool, budget),
                ClusterStrategy::Random => random_cluster(
                    &ctx,
                    &mut pool,
                    budget,
                    derive_seed(cfg.seed, TAG_CLUSTER_BASE + u as u64),
                ),
            }
        };
        let Some(derived) = derived else {
            // Candidate pool exhausted: partial plan.
            break;
        };
        let fake_id = g.n() + fakes.len();
        if derived.victims.len() < budget {
            short_clusters.push(fake_id);
        }

        let mut feature_rng =
            ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, TAG_FEATURE_BASE + u as u64));
        let feature = match strategy.feature {
            FeatureStrategy::Ours => generate_feature(
                derived.pseudo_label,
                &derived.victims,
                &z_tilde,
                &degrees,
                &ensemble.w_bar,
                &x_values,
                delta_x,
                &mut feature_rng,
            ),
            FeatureStrategy::RandomCopy => random_copy_feature(g, delta_x, &mut feature_rng),
            FeatureStrategy::MostFrequency => most_frequent_feature(
                derived.pseudo_label,
                freq_counts.as_ref().expect("counts precomputed"),
                g.dim(),
                &x_values,
                delta_x,
            ),
        };
        if feature.is_empty() {
            empty_features.push(fake_id);
        }

        perturbed.add_fake_node(&derived.victims, &feature)?;
        fakes.push(FakeNode {
            fake_id,
            budget,
            pseudo_label: derived.pseudo_label,
            victims: derived.victims,
            feature,
        });

        if cfg.recompute_smooth && u + 1 < cfg.n_fake {
            let z_prime = gcn_forward(&ensemble.members[0], &perturbed)?;
            z_tilde = smooth(&perturbed, &z_prime, cfg.alpha, cfg.max_iters, cfg.tol)?;
        }
    }

    let total_edges = fakes.iter().map(|f| f.budget).sum();
    Ok(InjectionPlan {
        fakes,
        audit: PlanAudit {
            total_edges,
            delta_x,
            short_clusters,
            empty_features,
        },
    })
}

/// Baseline cluster growth: the best-ranked group members by selection
/// score, without the margin-retention loop.
fn top_nodes_cluster(
    ctx: &ClusterContext<'_>,
    pool: &mut SelectionPool,
    budget: usize,
) -> Option<DerivedCluster> {
    let seed = pool.first_unconsumed()?;
    pool.consume(seed);
    let c_u = ctx.target[seed];
    let mut victims = vec![seed];
    while victims.len() < budget {
        let candidates = pool.group_unconsumed(c_u);
        let Some(&next) = candidates.first() else {
            break;
        };
        pool.consume(next);
        victims.push(next);
    }
    Some(DerivedCluster {
        pseudo_label: c_u,
        victims,
    })
}

/// Baseline cluster growth: uniform draws from the seed's group.
fn random_cluster(
    ctx: &ClusterContext<'_>,
    pool: &mut SelectionPool,
    budget: usize,
    seed_value: u64,
) -> Option<DerivedCluster> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed_value);
    let seed = pool.first_unconsumed()?;
    pool.consume(seed);
    let c_u = ctx.target[seed];
    let mut victims = vec![seed];
    while victims.len() < budget {
        let candidates = pool.group_unconsumed(c_u);
        if candidates.is_empty() {
            break;
        }
        let next = candidates[rng.random_range(0..candidates.len())];
        pool.consume(next);
        victims.push(next);
    }
    Some(DerivedCluster {
        pseudo_label: c_u,
        victims,
    })
}
