//! Heterogeneous manufacturer/service graph.
//!
//! Nodes are either manufacturers or services of one of four categories.
//! Edges are undirected and unweighted, stored as sorted neighbor lists so
//! that the adjacency is symmetric with an empty diagonal by construction.

mod corpus;
mod io;
mod task;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{
    build_from_corpus, load_corpus, load_service_links, load_service_vocabulary, normalize_text,
    tokenize,
};
pub use io::{load_graph, save_graph};
pub use task::{
    compute_imbalance, mask_target, stratified_split, ClassStats, LabeledTask, Split,
    SplitAssignment, SplitRatios,
};

/// Dense node index, contiguous from 0 to `node_count() - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceCategory {
    Industry,
    Process,
    Material,
    Certification,
}

impl ServiceCategory {
    pub const ALL: [ServiceCategory; 4] = [
        ServiceCategory::Industry,
        ServiceCategory::Process,
        ServiceCategory::Material,
        ServiceCategory::Certification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceCategory::Industry => "industry",
            ServiceCategory::Process => "process",
            ServiceCategory::Material => "material",
            ServiceCategory::Certification => "certification",
        }
    }
}

impl FromStr for ServiceCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "industry" => Ok(ServiceCategory::Industry),
            "process" | "service" => Ok(ServiceCategory::Process),
            "material" => Ok(ServiceCategory::Material),
            "certification" => Ok(ServiceCategory::Certification),
            other => Err(format!("unknown service category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Manufacturer,
    Service(ServiceCategory),
}

impl NodeKind {
    pub fn is_manufacturer(self) -> bool {
        matches!(self, NodeKind::Manufacturer)
    }

    pub fn is_service(self) -> bool {
        !self.is_manufacturer()
    }

    /// Integer attribute code: manufacturer 0, industry 1, process 2,
    /// material 3, certification 4.
    pub fn type_code(self) -> u8 {
        match self {
            NodeKind::Manufacturer => 0,
            NodeKind::Service(ServiceCategory::Industry) => 1,
            NodeKind::Service(ServiceCategory::Process) => 2,
            NodeKind::Service(ServiceCategory::Material) => 3,
            NodeKind::Service(ServiceCategory::Certification) => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub name: String,
}

impl Node {
    pub fn manufacturer(name: impl Into<String>) -> Self {
        Node {
            kind: NodeKind::Manufacturer,
            name: name.into(),
        }
    }

    pub fn service(category: ServiceCategory, name: impl Into<String>) -> Self {
        Node {
            kind: NodeKind::Service(category),
            name: name.into(),
        }
    }
}

/// Per-node type codes, one entry per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCodeVector(pub Vec<u8>);

impl TypeCodeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Immutable undirected graph over manufacturer and service nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: Vec<Node>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph, collapsing duplicate edges. Rejects dangling
    /// endpoints, self-loops and manufacturer-manufacturer edges.
    pub fn new<I>(nodes: Vec<Node>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let p = nodes.len();
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); p];
        for (a, b) in edges {
            check_edge(&nodes, a, b).map_err(Error::InvalidGraph)?;
            adjacency[a.0].push(b);
            adjacency[b.0].push(a);
        }
        let mut twice = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(Graph {
            nodes,
            adjacency,
            edge_count: twice / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.0]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id.0].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a.0].binary_search(&b).is_ok()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn manufacturers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&id| self.kind(id).is_manufacturer())
    }

    pub fn services(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&id| self.kind(id).is_service())
    }

    /// Undirected edges as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .copied()
                .filter(move |b| b.0 > a)
                .map(move |b| (NodeId(a), b))
        })
    }

    /// Looks up a service by name, ignoring case and surrounding whitespace.
    pub fn find_service(&self, name: &str) -> Result<NodeId> {
        let wanted = normalize_text(name);
        let mut found = None;
        for id in self.ids() {
            if normalize_text(&self.nodes[id.0].name) == wanted {
                if self.kind(id).is_manufacturer() {
                    found.get_or_insert(Err(Error::NotAService(name.to_string())));
                } else {
                    return Ok(id);
                }
            }
        }
        found.unwrap_or_else(|| Err(Error::UnknownService(name.to_string())))
    }

    pub fn find_manufacturer(&self, name: &str) -> Result<NodeId> {
        self.manufacturers()
            .find(|&id| self.nodes[id.0].name == name)
            .or_else(|| {
                let wanted = normalize_text(name);
                self.manufacturers()
                    .find(|&id| normalize_text(&self.nodes[id.0].name) == wanted)
            })
            .ok_or_else(|| Error::UnknownManufacturer(name.to_string()))
    }

    /// Type code of every node.
    pub fn type_codes(&self) -> TypeCodeVector {
        init_type_codes(self)
    }

    /// Drops every node flagged in `remove` together with its incident
    /// edges. Returns the compacted graph and the old-to-new id map.
    pub fn without_nodes(&self, remove: &[bool]) -> (Graph, Vec<Option<NodeId>>) {
        assert_eq!(remove.len(), self.node_count());
        let mut map = vec![None; self.node_count()];
        let mut nodes = Vec::with_capacity(self.node_count());
        for (old, node) in self.nodes.iter().enumerate() {
            if !remove[old] {
                map[old] = Some(NodeId(nodes.len()));
                nodes.push(node.clone());
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut twice = 0;
        for (old, list) in self.adjacency.iter().enumerate() {
            if let Some(new) = map[old] {
                let kept: Vec<NodeId> = list.iter().filter_map(|b| map[b.0]).collect();
                twice += kept.len();
                adjacency[new.0] = kept;
            }
        }
        let graph = Graph {
            nodes,
            adjacency,
            edge_count: twice / 2,
        };
        (graph, map)
    }

    /// Appends nodes (taking ids after the existing ones) and edges.
    pub fn with_appended(
        &self,
        extra_nodes: Vec<Node>,
        extra_edges: &[(NodeId, NodeId)],
    ) -> Result<Graph> {
        let mut nodes = self.nodes.clone();
        nodes.extend(extra_nodes);
        let edges = self.edges().chain(extra_edges.iter().copied());
        Graph::new(nodes, edges)
    }

    /// Removes the listed edges; edges that are absent are ignored.
    pub fn without_edges(&self, removed: &[(NodeId, NodeId)]) -> Graph {
        let mut adjacency = self.adjacency.clone();
        for &(a, b) in removed {
            if let Ok(pos) = adjacency[a.0].binary_search(&b) {
                adjacency[a.0].remove(pos);
            }
            if let Ok(pos) = adjacency[b.0].binary_search(&a) {
                adjacency[b.0].remove(pos);
            }
        }
        let twice: usize = adjacency.iter().map(Vec::len).sum();
        Graph {
            nodes: self.nodes.clone(),
            adjacency,
            edge_count: twice / 2,
        }
    }

    /// Name index used by the corpus builder and the CLI.
    pub fn name_index(&self) -> HashMap<&str, NodeId> {
        self.ids()
            .map(|id| (self.nodes[id.0].name.as_str(), id))
            .collect()
    }
}

fn check_edge(nodes: &[Node], a: NodeId, b: NodeId) -> std::result::Result<(), String> {
    let p = nodes.len();
    if a.0 >= p || b.0 >= p {
        return Err(format!(
            "dangling endpoint in edge ({a}, {b}); node count is {p}"
        ));
    }
    if a == b {
        return Err(format!("self-loop on node {a}"));
    }
    if nodes[a.0].kind.is_manufacturer() && nodes[b.0].kind.is_manufacturer() {
        return Err(format!("manufacturer-manufacturer edge ({a}, {b})"));
    }
    Ok(())
}

/// Assigns each node its integer attribute code from its kind alone.
pub fn init_type_codes(graph: &Graph) -> TypeCodeVector {
    TypeCodeVector(graph.nodes().iter().map(|n| n.kind.type_code()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Graph {
        let nodes = vec![
            Node::manufacturer("acme"),
            Node::service(ServiceCategory::Process, "Machining"),
            Node::service(ServiceCategory::Material, "Copper"),
        ];
        Graph::new(nodes, [(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))]).unwrap()
    }

    #[test]
    fn adjacency_is_symmetric() {
        let g = tiny();
        for (a, b) in g.edges() {
            assert!(g.has_edge(a, b) && g.has_edge(b, a));
        }
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let nodes = tiny().nodes().to_vec();
        let g = Graph::new(
            nodes,
            [
                (NodeId(0), NodeId(1)),
                (NodeId(1), NodeId(0)),
                (NodeId(0), NodeId(1)),
            ],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(NodeId(0)), 1);
    }

    #[test]
    fn rejects_bad_edges() {
        let nodes = tiny().nodes().to_vec();
        assert!(Graph::new(nodes.clone(), [(NodeId(0), NodeId(0))]).is_err());
        assert!(Graph::new(nodes.clone(), [(NodeId(0), NodeId(9))]).is_err());
        let two = vec![Node::manufacturer("a"), Node::manufacturer("b")];
        assert!(Graph::new(two, [(NodeId(0), NodeId(1))]).is_err());
    }

    #[test]
    fn type_codes_cover_every_kind() {
        let kinds = [
            (NodeKind::Manufacturer, 0),
            (NodeKind::Service(ServiceCategory::Industry), 1),
            (NodeKind::Service(ServiceCategory::Process), 2),
            (NodeKind::Service(ServiceCategory::Material), 3),
            (NodeKind::Service(ServiceCategory::Certification), 4),
        ];
        for (kind, code) in kinds {
            assert_eq!(kind.type_code(), code);
        }
        assert_eq!(tiny().type_codes().0, vec![0, 2, 3]);
    }

    #[test]
    fn service_lookup_is_case_insensitive() {
        let g = tiny();
        assert_eq!(g.find_service("machining").unwrap(), NodeId(1));
        assert!(matches!(g.find_service("acme"), Err(Error::NotAService(_))));
        assert!(matches!(
            g.find_service("welding"),
            Err(Error::UnknownService(_))
        ));
    }

    #[test]
    fn node_removal_compacts_ids() {
        let g = tiny();
        let (h, map) = g.without_nodes(&[false, true, false]);
        assert_eq!(h.node_count(), 2);
        assert_eq!(h.edge_count(), 0);
        assert_eq!(map, vec![Some(NodeId(0)), None, Some(NodeId(1))]);
    }
}
