//! Keyword-match graph construction from pre-collected manufacturer text.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{Graph, Node, NodeId, ServiceCategory};
use crate::error::{Error, Result};

/// Lowercases, replaces every non-alphanumeric character with a space and
/// collapses whitespace runs.
pub fn normalize_text(text: &str) -> String {
    let mapped: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    normalize_text(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads `name<TAB>document-text` records, one per line, in file order.
pub fn load_corpus(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (name, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `name<TAB>text`"))?;
        if name.trim().is_empty() {
            return Err(Error::parse(path, i + 1, "empty manufacturer name"));
        }
        docs.push((name.to_string(), body.to_string()));
    }
    Ok(docs)
}

/// Reads `category<TAB>service name` records. Blank lines and lines
/// starting with `#` are skipped.
pub fn load_service_vocabulary(path: &Path) -> Result<Vec<(String, ServiceCategory)>> {
    let mut out = Vec::new();
    for (line_no, a, b) in tab_pairs(path)? {
        let category = a
            .parse::<ServiceCategory>()
            .map_err(|_| Error::parse(path, line_no, format!("unknown service category `{a}`")))?;
        out.push((b, category));
    }
    Ok(out)
}

/// Reads `service<TAB>service` name pairs.
pub fn load_service_links(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(tab_pairs(path)?
        .into_iter()
        .map(|(_, a, b)| (a, b))
        .collect())
}

fn tab_pairs(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected two tab-separated fields"))?;
        if a.trim().is_empty() || b.trim().is_empty() {
            return Err(Error::parse(path, i + 1, "empty field"));
        }
        out.push((i + 1, a.trim().to_string(), b.trim().to_string()));
    }
    Ok(out)
}

/// Builds a graph with one manufacturer per document (in input order)
/// followed by one node per service. A manufacturer links to a service
/// when the service name's tokens occur contiguously in the document's
/// tokens. Service-service edges are copied as given.
pub fn build_from_corpus(
    docs: &[(String, String)],
    services: &[(String, ServiceCategory)],
    service_edges: &[(String, String)],
) -> Result<Graph> {
    if docs.is_empty() {
        return Err(Error::InvalidGraph("corpus has no documents".into()));
    }
    let mut service_tokens: Vec<Vec<String>> = Vec::with_capacity(services.len());
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (i, (name, _)) in services.iter().enumerate() {
        let toks = tokenize(name);
        if toks.is_empty() {
            return Err(Error::InvalidGraph(format!(
                "service name `{name}` is empty after normalization"
            )));
        }
        if by_name.insert(toks.join(" "), i).is_some() {
            return Err(Error::DuplicateService(name.clone()));
        }
        service_tokens.push(toks);
    }

    // services keyed by their first token
    let mut by_first: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, toks) in service_tokens.iter().enumerate() {
        by_first.entry(toks[0].as_str()).or_default().push(i);
    }

    let n_docs = docs.len();
    let mut nodes: Vec<Node> = docs
        .iter()
        .map(|(name, _)| Node::manufacturer(name.clone()))
        .collect();
    nodes.extend(
        services
            .iter()
            .map(|(name, cat)| Node::service(*cat, name.clone())),
    );

    let mut edges = Vec::new();
    for (m, (_, text)) in docs.iter().enumerate() {
        let toks = tokenize(text);
        let mut hit = HashSet::new();
        for start in 0..toks.len() {
            if let Some(cands) = by_first.get(toks[start].as_str()) {
                for &s in cands {
                    let st = &service_tokens[s];
                    if toks.len() - start >= st.len() && toks[start..start + st.len()] == st[..] {
                        hit.insert(s);
                    }
                }
            }
        }
        let mut hit: Vec<usize> = hit.into_iter().collect();
        hit.sort_unstable();
        edges.extend(hit.into_iter().map(|s| (NodeId(m), NodeId(n_docs + s))));
    }

    for (a, b) in service_edges {
        let lookup = |name: &String| {
            by_name
                .get(&normalize_text(name))
                .map(|&s| NodeId(n_docs + s))
                .ok_or_else(|| Error::UnknownService(name.clone()))
        };
        edges.push((lookup(a)?, lookup(b)?));
    }
    Graph::new(nodes, edges)
}
