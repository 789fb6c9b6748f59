//! Tab-separated node and edge files.
//!
//! Node file: `id<TAB>kind<TAB>category<TAB>name`, where kind is
//! `manufacturer` or `service` and category is `-` for manufacturers.
//! Edge file: `src<TAB>dst`. Blank lines and lines starting with `#` are
//! skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Graph, Node, NodeId, NodeKind, ServiceCategory};
use crate::error::{Error, Result};

pub fn load_graph(node_file: &Path, edge_file: &Path) -> Result<Graph> {
    let node_text = fs::read_to_string(node_file).map_err(|e| Error::io(node_file, e))?;
    let edge_text = fs::read_to_string(edge_file).map_err(|e| Error::io(edge_file, e))?;
    let nodes = parse_nodes(node_file, &node_text)?;
    let edges = parse_edges(edge_file, &edge_text, &nodes)?;
    Graph::new(nodes, edges)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_nodes(path: &Path, text: &str) -> Result<Vec<Node>> {
    let mut slots: Vec<Option<Node>> = Vec::new();
    for (line, raw) in content_lines(text) {
        let fields: Vec<&str> = raw.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, line, "expected 4 tab-separated fields"));
        }
        let id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad node id `{}`", fields[0])))?;
        let kind = match fields[1].trim().to_ascii_lowercase().as_str() {
            "manufacturer" => {
                if fields[2].trim() != "-" {
                    return Err(Error::parse(
                        path,
                        line,
                        "manufacturer category must be `-`",
                    ));
                }
                NodeKind::Manufacturer
            }
            "service" => {
                let cat: ServiceCategory = fields[2]
                    .trim()
                    .parse()
                    .map_err(|m: String| Error::parse(path, line, m))?;
                NodeKind::Service(cat)
            }
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unknown node kind `{other}`"),
                ))
            }
        };
        if id >= slots.len() {
            slots.resize(id + 1, None);
        }
        if slots[id].is_some() {
            return Err(Error::parse(path, line, format!("duplicate node id {id}")));
        }
        slots[id] = Some(Node {
            kind,
            name: fields[3].to_string(),
        });
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(id, n)| {
            n.ok_or_else(|| {
                Error::parse(
                    path,
                    0,
                    format!("node ids are not contiguous: {id} missing"),
                )
            })
        })
        .collect()
}

fn parse_edges(path: &Path, text: &str, nodes: &[Node]) -> Result<Vec<(NodeId, NodeId)>> {
    let mut edges = Vec::new();
    for (line, raw) in content_lines(text) {
        let mut fields = raw.split('\t');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => return Err(Error::parse(path, line, "expected 2 tab-separated fields")),
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, line, format!("bad node id `{s}`")))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a >= nodes.len() || b >= nodes.len() {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "dangling endpoint in edge ({a}, {b}); max id is {}",
                    nodes.len() as isize - 1
                ),
            ));
        }
        if a == b {
            return Err(Error::parse(path, line, format!("self-loop on node {a}")));
        }
        if nodes[a].kind.is_manufacturer() && nodes[b].kind.is_manufacturer() {
            return Err(Error::parse(path, line, "manufacturer-manufacturer edge"));
        }
        edges.push((NodeId(a), NodeId(b)));
    }
    Ok(edges)
}

/// Writes canonical node and edge files (ids ascending, edges with
/// `src < dst` in ascending order).
pub fn save_graph(graph: &Graph, node_file: &Path, edge_file: &Path) -> Result<()> {
    let mut nodes = String::new();
    for id in graph.ids() {
        let node = graph.node(id);
        let (kind, cat) = match node.kind {
            NodeKind::Manufacturer => ("manufacturer", "-"),
            NodeKind::Service(c) => ("service", c.as_str()),
        };
        let _ = writeln!(nodes, "{id}\t{kind}\t{cat}\t{}", node.name);
    }
    let mut edges = String::new();
    for (a, b) in graph.edges() {
        let _ = writeln!(edges, "{a}\t{b}");
    }
    fs::write(node_file, nodes).map_err(|e| Error::io(node_file, e))?;
    fs::write(edge_file, edges).map_err(|e| Error::io(edge_file, e))?;
    Ok(())
}
