//! Synthetic Edge and Node Generation (SENG).
//!
//! Balances the node classes by fabricating manufacturer nodes. Each
//! synthetic node pools the service neighborhoods of a few minority-class
//! training manufacturers (drawn with replacement) and attaches to a
//! random `1/alpha` share of that pool. No service node is ever created.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    compute_imbalance, ClassStats, Graph, LabeledTask, Node, NodeId, Split, SplitAssignment,
};

pub const MAX_SEED_RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SengConfig {
    pub oversampling_scale: f64,
    /// Oversampling only runs when the training imbalance ratio is at or
    /// below this value.
    pub ratio_threshold: f64,
    pub alpha_choices: Vec<usize>,
    pub seed: u64,
    /// Generate `(1 + OS) * |c2|` nodes instead of `OS * |c2|`.
    pub literal_count: bool,
}

impl Default for SengConfig {
    fn default() -> Self {
        SengConfig {
            oversampling_scale: 1.0,
            ratio_threshold: 0.7,
            alpha_choices: vec![2, 3, 4],
            seed: 0,
            literal_count: false,
        }
    }
}

impl SengConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.oversampling_scale >= 0.0) || !self.oversampling_scale.is_finite() {
            return Err(Error::Config(format!(
                "oversampling scale must be non-negative, got {}",
                self.oversampling_scale
            )));
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "ratio threshold must lie in (0, 1], got {}",
                self.ratio_threshold
            )));
        }
        if self.alpha_choices.is_empty() || self.alpha_choices.iter().any(|a| !(2..=4).contains(a))
        {
            return Err(Error::Config(format!(
                "alpha choices must be a non-empty subset of {{2, 3, 4}}, got {:?}",
                self.alpha_choices
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticNodeRecord {
    pub node: NodeId,
    pub alpha: usize,
    /// Sampled with replacement, in draw order.
    pub seed_manufacturers: Vec<NodeId>,
    /// Ascending.
    pub attached_services: Vec<NodeId>,
}

/// Base graph plus synthetic manufacturers, with labels and split extended
/// to cover them. Synthetic ids follow the base ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGraph {
    pub base: Graph,
    pub graph: Graph,
    pub synthetic: Vec<SyntheticNodeRecord>,
    pub labels: Vec<u8>,
    pub split: SplitAssignment,
}

impl AugmentedGraph {
    /// Wraps a task without any oversampling.
    pub fn unchanged(task: &LabeledTask, split: &SplitAssignment) -> Self {
        AugmentedGraph {
            base: task.graph.clone(),
            graph: task.graph.clone(),
            synthetic: Vec::new(),
            labels: task.labels.clone(),
            split: split.clone(),
        }
    }

    pub fn base_node_count(&self) -> usize {
        self.base.node_count()
    }

    pub fn is_synthetic(&self, id: NodeId) -> bool {
        id.0 >= self.base.node_count()
    }

    /// Graph with every synthetic node and edge removed.
    pub fn strip_synthetic(&self) -> Graph {
        let remove: Vec<bool> = (0..self.graph.node_count())
            .map(|i| self.is_synthetic(NodeId(i)))
            .collect();
        self.graph.without_nodes(&remove).0
    }

    /// One line per synthetic node:
    /// `node_id<TAB>alpha<TAB>seed_manufacturers<TAB>services`, list
    /// fields comma-separated.
    pub fn audit_lines(&self) -> String {
        let join = |ids: &[NodeId]| {
            ids.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        for r in &self.synthetic {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.node,
                r.alpha,
                join(&r.seed_manufacturers),
                join(&r.attached_services)
            );
        }
        out
    }

    pub fn write_audit(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.audit_lines()).map_err(|e| Error::io(path, e))
    }
}

/// Number of synthetic nodes for a minority class of `stats.minority_size`.
pub fn num_synthetic_nodes(
    stats: &ClassStats,
    oversampling_scale: f64,
    literal_count: bool,
) -> usize {
    let factor = if literal_count {
        1.0 + oversampling_scale
    } else {
        oversampling_scale
    };
    (factor * stats.minority_size as f64).round() as usize
}

/// Draws one synthetic manufacturer. `node` is the id it will receive.
pub fn generate_synthetic_node<R: Rng>(
    graph: &Graph,
    minority_manufacturers: &[NodeId],
    alpha_choices: &[usize],
    node: NodeId,
    rng: &mut R,
) -> Result<SyntheticNodeRecord> {
    if minority_manufacturers.is_empty() {
        return Err(Error::Oversampling(
            "no minority-class manufacturers to seed from".into(),
        ));
    }
    for _ in 0..MAX_SEED_RETRIES {
        let alpha = *alpha_choices
            .choose(rng)
            .expect("alpha choices validated non-empty");
        let seeds: Vec<NodeId> = (0..alpha)
            .map(|_| *minority_manufacturers.choose(rng).expect("non-empty"))
            .collect();
        let pool: BTreeSet<NodeId> = seeds
            .iter()
            .flat_map(|&m| graph.neighbors(m).iter().copied())
            .filter(|&s| graph.kind(s).is_service())
            .collect();
        if pool.is_empty() {
            continue;
        }
        let pool: Vec<NodeId> = pool.into_iter().collect();
        let take = pool.len().div_ceil(alpha);
        let mut attached: Vec<NodeId> = pool.choose_multiple(rng, take).copied().collect();
        attached.sort_unstable();
        return Ok(SyntheticNodeRecord {
            node,
            alpha,
            seed_manufacturers: seeds,
            attached_services: attached,
        });
    }
    Err(Error::Oversampling(format!(
        "sampled manufacturers had no service neighbors in {MAX_SEED_RETRIES} attempts"
    )))
}

/// Oversamples the minority class of the training split.
pub fn oversample(
    task: &LabeledTask,
    split: &SplitAssignment,
    config: &SengConfig,
) -> Result<AugmentedGraph> {
    config.validate()?;
    let stats = compute_imbalance(&task.labels, split.nodes_in(Split::Train))?;
    let count = num_synthetic_nodes(&stats, config.oversampling_scale, config.literal_count);
    if stats.imbalance_ratio > config.ratio_threshold || count == 0 {
        return Ok(AugmentedGraph::unchanged(task, split));
    }
    let graph = &task.graph;
    let minority: Vec<NodeId> = split
        .nodes_in(Split::Train)
        .filter(|&id| task.labels[id.0] == stats.minority_label && graph.kind(id).is_manufacturer())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base_p = graph.node_count();
    let mut records = Vec::with_capacity(count);
    let mut nodes = Vec::with_capacity(count);
    let mut edges = Vec::new();
    for i in 0..count {
        let id = NodeId(base_p + i);
        let rec = generate_synthetic_node(graph, &minority, &config.alpha_choices, id, &mut rng)?;
        edges.extend(rec.attached_services.iter().map(|&s| (id, s)));
        nodes.push(Node::manufacturer(format!("synthetic-{i}")));
        records.push(rec);
    }
    let augmented = graph.with_appended(nodes, &edges)?;

    let mut labels = task.labels.clone();
    labels.resize(base_p + count, stats.minority_label);
    let mut assignment = split.assignment.clone();
    assignment.resize(base_p + count, Split::Train);

    Ok(AugmentedGraph {
        base: graph.clone(),
        graph: augmented,
        synthetic: records,
        labels,
        split: SplitAssignment {
            assignment,
            seed: split.seed,
        },
    })
}
