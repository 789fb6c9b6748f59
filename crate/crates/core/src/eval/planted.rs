//! Planted-partition benchmark graphs with a known capability label.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Node, NodeId, NodeKind, ServiceCategory};

pub const PLANTED_TARGET: &str = "Machining";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedDatasetSpec {
    pub n_manufacturers: usize,
    /// Services per category; the target counts towards the process services.
    pub services_per_category: usize,
    pub clusters: usize,
    /// Probability that a manufacturer's home cluster follows its label.
    pub signal: f64,
    /// Probability that an individual edge ignores the home cluster.
    pub noise: f64,
    /// Edges from each manufacturer to non-target services.
    pub services_per_manufacturer: usize,
    /// Capable nodes over all other nodes once the target is masked.
    pub imbalance_ratio: f64,
    pub seed: u64,
}

impl Default for PlantedDatasetSpec {
    fn default() -> Self {
        PlantedDatasetSpec {
            n_manufacturers: 1000,
            services_per_category: 30,
            clusters: 4,
            signal: 0.9,
            noise: 0.05,
            services_per_manufacturer: 5,
            imbalance_ratio: 0.2,
            seed: 0,
        }
    }
}

impl PlantedDatasetSpec {
    pub fn service_count(&self) -> usize {
        self.services_per_category * ServiceCategory::ALL.len()
    }

    pub fn node_count(&self) -> usize {
        self.n_manufacturers + self.service_count()
    }

    /// Manufacturers linked to the target.
    pub fn capable_count(&self) -> usize {
        let others = (self.node_count() - 1) as f64;
        (self.imbalance_ratio * others / (1.0 + self.imbalance_ratio)).round() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.n_manufacturers * self.services_per_manufacturer + self.capable_count()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("signal", self.signal), ("noise", self.noise)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.clusters < 2 {
            return Err(Error::Config(
                "planted graphs need at least 2 clusters".into(),
            ));
        }
        if self.services_per_category == 0 {
            return Err(Error::Config(
                "services_per_category must be positive".into(),
            ));
        }
        if !(self.imbalance_ratio > 0.0) {
            return Err(Error::Config(format!(
                "imbalance ratio must be positive, got {}",
                self.imbalance_ratio
            )));
        }
        let per_cluster = (self.service_count() - 1) / self.clusters;
        if self.services_per_manufacturer == 0 || self.services_per_manufacturer > per_cluster {
            return Err(Error::Config(format!(
                "services_per_manufacturer must lie in [1, {per_cluster}] for this cluster size"
            )));
        }
        let capable = self.capable_count();
        if capable == 0 || capable >= self.n_manufacturers {
            return Err(Error::Config(format!(
                "{capable} capable manufacturers out of {} leaves a class empty",
                self.n_manufacturers
            )));
        }
        Ok(())
    }
}

/// Builds the graph and returns it with the target service. Capable
/// manufacturers are the first `capable_count()` ids. Non-target services
/// are dealt to clusters round-robin within each category, so the category
/// of a service says next to nothing about its cluster; cluster 0 is the one capable
/// manufacturers prefer.
pub fn generate_planted_dataset(spec: &PlantedDatasetSpec) -> Result<(Graph, NodeId)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_manufacturers;
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node::manufacturer(format!("manufacturer{i:05}")))
        .collect();
    let mut target = None;
    let mut services = Vec::new();
    for cat in ServiceCategory::ALL {
        for k in 0..spec.services_per_category {
            let id = NodeId(nodes.len());
            if cat == ServiceCategory::Process && k == 0 {
                nodes.push(Node::service(cat, PLANTED_TARGET));
                target = Some(id);
            } else {
                nodes.push(Node::service(cat, format!("{}{k:03}", cat.as_str())));
                services.push(id);
            }
        }
    }
    let target = target.expect("process category always present");
    let mut clusters: Vec<Vec<NodeId>> = vec![Vec::new(); spec.clusters];
    for (c, cat) in ServiceCategory::ALL.iter().enumerate() {
        let members = services
            .iter()
            .filter(|&&id| nodes[id.index()].kind == NodeKind::Service(*cat));
        for (k, &id) in members.enumerate() {
            clusters[(k + c) % spec.clusters].push(id);
        }
    }

    let capable = spec.capable_count();
    let d = spec.services_per_manufacturer;
    let mut edges = Vec::with_capacity(spec.edge_count());
    for m in 0..n {
        let is_capable = m < capable;
        let home = if rng.gen_bool(spec.signal) {
            if is_capable {
                0
            } else {
                rng.gen_range(1..spec.clusters)
            }
        } else {
            rng.gen_range(0..spec.clusters)
        };
        let mut chosen: Vec<NodeId> = Vec::with_capacity(d);
        while chosen.len() < d {
            let pool = if rng.gen_bool(spec.noise) {
                &services
            } else {
                &clusters[home]
            };
            let s = *pool.choose(&mut rng).expect("non-empty pool");
            if !chosen.contains(&s) {
                chosen.push(s);
            }
        }
        edges.extend(chosen.into_iter().map(|s| (NodeId(m), s)));
        if is_capable {
            edges.push((NodeId(m), target));
        }
    }
    let graph = Graph::new(nodes, edges)?;
    Ok((graph, target))
}
