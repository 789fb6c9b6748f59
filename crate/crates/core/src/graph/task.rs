//! Target masking, class statistics and stratified splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, Node, NodeId, ServiceCategory};
use crate::error::{Error, Result};

/// A graph with one target service masked out, plus node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTask {
    pub graph: Graph,
    /// 1 for manufacturers that were linked to the target, 0 otherwise.
    pub labels: Vec<u8>,
    pub target_name: String,
    pub target_category: ServiceCategory,
    /// Manufacturer-target edges removed by masking (ids in `graph`).
    pub removed_edges: Vec<(NodeId, String)>,
    /// Service-target edges removed by masking (ids in `graph`).
    pub removed_service_links: Vec<NodeId>,
}

impl LabeledTask {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Reinserts the target node (as the last id) with every removed edge.
    pub fn unmasked(&self) -> (Graph, NodeId) {
        let target = NodeId(self.graph.node_count());
        let edges: Vec<(NodeId, NodeId)> = self
            .removed_edges
            .iter()
            .map(|(m, _)| (*m, target))
            .chain(self.removed_service_links.iter().map(|&s| (s, target)))
            .collect();
        let graph = self
            .graph
            .with_appended(
                vec![Node::service(
                    self.target_category,
                    self.target_name.clone(),
                )],
                &edges,
            )
            .expect("restoring masked edges cannot produce an invalid graph");
        (graph, target)
    }

    /// Removes nodes, keeping labels and removed-edge records aligned.
    pub fn without_nodes(&self, remove: &[bool]) -> LabeledTask {
        let (graph, map) = self.graph.without_nodes(remove);
        let labels = self
            .labels
            .iter()
            .enumerate()
            .filter(|(i, _)| !remove[*i])
            .map(|(_, &l)| l)
            .collect();
        let removed_edges = self
            .removed_edges
            .iter()
            .filter_map(|(m, name)| map[m.0].map(|m| (m, name.clone())))
            .collect();
        let removed_service_links = self
            .removed_service_links
            .iter()
            .filter_map(|s| map[s.0])
            .collect();
        LabeledTask {
            graph,
            labels,
            target_name: self.target_name.clone(),
            target_category: self.target_category,
            removed_edges,
            removed_service_links,
        }
    }
}

/// Removes the target service node and its incident edges; manufacturers
/// that were adjacent to it become the positive class.
pub fn mask_target(graph: &Graph, target: &str) -> Result<LabeledTask> {
    let tid = graph.find_service(target)?;
    let category = match graph.kind(tid) {
        super::NodeKind::Service(c) => c,
        super::NodeKind::Manufacturer => unreachable!("find_service only returns services"),
    };
    let mut remove = vec![false; graph.node_count()];
    remove[tid.0] = true;
    let (masked, map) = graph.without_nodes(&remove);
    let mut labels = vec![0u8; masked.node_count()];
    let mut removed_edges = Vec::new();
    let mut removed_service_links = Vec::new();
    let name = graph.node(tid).name.clone();
    for &nb in graph.neighbors(tid) {
        let new = map[nb.0].expect("only the target is removed");
        if graph.kind(nb).is_manufacturer() {
            labels[new.0] = 1;
            removed_edges.push((new, name.clone()));
        } else {
            removed_service_links.push(new);
        }
    }
    Ok(LabeledTask {
        graph: masked,
        labels,
        target_name: name,
        target_category: category,
        removed_edges,
        removed_service_links,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub majority_size: usize,
    pub minority_size: usize,
    pub minority_label: u8,
    pub imbalance_ratio: f64,
}

impl ClassStats {
    pub fn majority_label(&self) -> u8 {
        1 - self.minority_label
    }
}

/// Class sizes over the eligible nodes. On an exact tie label 1 is
/// reported as the minority.
pub fn compute_imbalance(
    labels: &[u8],
    eligible: impl IntoIterator<Item = NodeId>,
) -> Result<ClassStats> {
    let mut counts = [0usize; 2];
    for id in eligible {
        counts[labels[id.0] as usize] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::DegenerateClasses(format!(
            "{} negatives, {} positives",
            counts[0], counts[1]
        )));
    }
    let minority_label = if counts[1] <= counts[0] { 1 } else { 0 };
    let minority_size = counts[minority_label as usize];
    let majority_size = counts[1 - minority_label as usize];
    Ok(ClassStats {
        majority_size,
        minority_size,
        minority_label,
        imbalance_ratio: minority_size as f64 / majority_size as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!(
                "split ratios must be positive: {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must sum to 1: {parts:?}"
            )));
        }
        Ok(())
    }

    /// Per-split counts for a class of `n` members; every split gets at
    /// least one member.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let mut train = (self.train * n as f64).round() as usize;
        let mut valid = ((self.valid * n as f64).round() as usize).max(1);
        if train + valid >= n {
            train = n.saturating_sub(valid + 1);
        }
        if train == 0 {
            train = 1;
            valid = n - 2;
        }
        (train, valid, n - train - valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub assignment: Vec<Split>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn nodes_in(&self, split: Split) -> impl Iterator<Item = NodeId> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == split)
            .map(|(i, _)| NodeId(i))
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.iter().filter(|&&s| s == split).count()
    }

    pub fn mask(&self, split: Split) -> Vec<bool> {
        self.assignment.iter().map(|&s| s == split).collect()
    }
}

/// Shuffles each class with the seed and assigns proportional slices to
/// train, validation and test.
pub fn stratified_split(labels: &[u8], ratios: SplitRatios, seed: u64) -> Result<SplitAssignment> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![Split::Train; labels.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 3 {
            return Err(Error::ClassTooSmall {
                label: class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let (train, valid, _) = ratios.counts(members.len());
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = if k < train {
                Split::Train
            } else if k < train + valid {
                Split::Valid
            } else {
                Split::Test
            };
        }
    }
    Ok(SplitAssignment { assignment, seed })
}
