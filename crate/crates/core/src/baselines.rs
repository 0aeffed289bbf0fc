//! Ablation strategies: each axis of the attack (victim scoring, cluster
//! growth, feature synthesis) can independently fall back to a simple
//! baseline while sharing the flagship budgets and constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphBundle;
use crate::injector::{execute_attack, AttackConfig, InjectionPlan};
use crate::surrogate::SurrogateEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStrategy {
    /// Uniform scores in [0, 1).
    Random,
    /// Prefer low-degree nodes: score 1/d.
    Degree,
    /// Propagation score.
    Ours,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStrategy {
    /// Uniform draws from the seed's target-label group.
    Random,
    /// Best-scored group members, no margin-retention loop.
    TopNodes,
    /// Greedy margin loop.
    Ours,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStrategy {
    /// Copy a uniformly chosen original node's feature row.
    RandomCopy,
    /// Most frequently non-zero elements of the pseudo-label class.
    MostFrequency,
    /// Weight-margin scored elements.
    Ours,
}

/// One point of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub node: NodeStrategy,
    pub cluster: ClusterStrategy,
    pub feature: FeatureStrategy,
}

impl StrategySpec {
    pub fn ours() -> Self {
        Self {
            node: NodeStrategy::Ours,
            cluster: ClusterStrategy::Ours,
            feature: FeatureStrategy::Ours,
        }
    }

    pub fn all_random() -> Self {
        Self {
            node: NodeStrategy::Random,
            cluster: ClusterStrategy::Random,
            feature: FeatureStrategy::RandomCopy,
        }
    }

    /// Parse `node,cluster,feature` where each part is a strategy name
    /// (`ours`, `random`, `degree`, `top_nodes`, `most_frequency`,
    /// `random_copy`; `random` on the feature axis means `random_copy`).
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::config(format!(
                "strategy '{text}' must be three comma-separated parts"
            )));
        }
        let node = match parts[0] {
            "ours" => NodeStrategy::Ours,
            "random" => NodeStrategy::Random,
            "degree" => NodeStrategy::Degree,
            other => {
                return Err(Error::config(format!("unknown node strategy '{other}'")));
            }
        };
        let cluster = match parts[1] {
            "ours" => ClusterStrategy::Ours,
            "random" => ClusterStrategy::Random,
            "top_nodes" | "topnodes" => ClusterStrategy::TopNodes,
            other => {
                return Err(Error::config(format!("unknown cluster strategy '{other}'")));
            }
        };
        let feature = match parts[2] {
            "ours" => FeatureStrategy::Ours,
            "random" | "random_copy" => FeatureStrategy::RandomCopy,
            "most_frequency" | "mostfrequency" => FeatureStrategy::MostFrequency,
            other => {
                return Err(Error::config(format!("unknown feature strategy '{other}'")));
            }
        };
        Ok(Self {
            node,
            cluster,
            feature,
        })
    }

    /// Canonical `node,cluster,feature` form, inverse of [`parse`].
    pub fn name(&self) -> String {
        let node = match self.node {
            NodeStrategy::Random => "random",
            NodeStrategy::Degree => "degree",
            NodeStrategy::Ours => "ours",
        };
        let cluster = match self.cluster {
            ClusterStrategy::Random => "random",
            ClusterStrategy::TopNodes => "top_nodes",
            ClusterStrategy::Ours => "ours",
        };
        let feature = match self.feature {
            FeatureStrategy::RandomCopy => "random_copy",
            FeatureStrategy::MostFrequency => "most_frequency",
            FeatureStrategy::Ours => "ours",
        };
        format!("{node},{cluster},{feature}")
    }
}

/// Run the attack with per-axis strategy substitutions. Budgets, the
/// single-attack rule, and all feature caps are identical to the flagship
/// attack; `(ours, ours, ours)` reproduces it exactly.
pub fn baseline_attack(
    g: &GraphBundle,
    ensemble: &SurrogateEnsemble,
    cfg: &AttackConfig,
    spec: &StrategySpec,
) -> Result<InjectionPlan> {
    execute_attack(g, ensemble, cfg, spec)
}
