//! Neighbor-name paragraphs and distributed bag-of-words paragraph vectors.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{dot, sigmoid, DenseMatrix};
use crate::graph::{tokenize, Graph, NodeId};

/// Token list per manufacturer, built from the names of its service
/// neighbors in neighbor order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborParagraphs {
    pub owners: Vec<NodeId>,
    pub tokens: Vec<Vec<String>>,
}

impl NeighborParagraphs {
    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }

    pub fn get(&self, id: NodeId) -> Option<&[String]> {
        self.owners
            .binary_search(&id)
            .ok()
            .map(|k| self.tokens[k].as_slice())
    }
}

pub fn build_neighbor_paragraphs(graph: &Graph) -> NeighborParagraphs {
    let owners: Vec<NodeId> = graph.manufacturers().collect();
    let tokens = owners
        .iter()
        .map(|&m| {
            graph
                .neighbors(m)
                .iter()
                .filter(|&&s| graph.kind(s).is_service())
                .flat_map(|&s| tokenize(&graph.node(s).name))
                .collect()
        })
        .collect();
    NeighborParagraphs { owners, tokens }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParagraphConfig {
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for ParagraphConfig {
    fn default() -> Self {
        ParagraphConfig {
            dim: 64,
            epochs: 40,
            lr: 0.025,
            negatives: 5,
            seed: 0,
        }
    }
}

impl ParagraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!(
                "embedding width must be at least 2, got {}",
                self.dim
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config(
                "paragraph-vector epochs must be positive".into(),
            ));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!(
                "paragraph-vector lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// One row per paragraph owner, in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphEmbeddings {
    pub owners: Vec<NodeId>,
    pub matrix: DenseMatrix,
}

/// Noise distribution over the vocabulary, proportional to count^0.75.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[usize]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Trains a paragraph vector per owner by predicting each of its tokens
/// against sampled noise tokens. Empty paragraphs keep the zero vector.
pub fn train_paragraph_vectors(
    paragraphs: &NeighborParagraphs,
    config: &ParagraphConfig,
) -> Result<ParagraphEmbeddings> {
    config.validate()?;
    let mut vocab: HashMap<&str, usize> = HashMap::new();
    let mut counts = Vec::new();
    let docs: Vec<Vec<usize>> = paragraphs
        .tokens
        .iter()
        .map(|toks| {
            toks.iter()
                .map(|t| {
                    let next = vocab.len();
                    let idx = *vocab.entry(t.as_str()).or_insert(next);
                    if idx == counts.len() {
                        counts.push(0);
                    }
                    counts[idx] += 1;
                    idx
                })
                .collect()
        })
        .collect();
    let total_tokens: usize = docs.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(Error::InvalidGraph(
            "every neighbor paragraph is empty".into(),
        ));
    }

    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_vecs = DenseMatrix::zeros(docs.len(), d);
    for (k, doc) in docs.iter().enumerate() {
        if !doc.is_empty() {
            for v in doc_vecs.row_mut(k) {
                *v = (rng.gen::<f64>() - 0.5) / d as f64;
            }
        }
    }
    let mut out_vecs = DenseMatrix::zeros(counts.len(), d);
    let noise = NoiseTable::new(&counts);

    let total_steps = (config.epochs * total_tokens) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..docs.len()).filter(|&k| !docs[k].is_empty()).collect();
    let mut grad = vec![0.0; d];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            for &word in &docs[k] {
                let lr = config.lr * (1.0 - step as f64 / total_steps).max(1e-4);
                step += 1;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for n in 0..=config.negatives {
                    let (target, label) = if n == 0 {
                        (word, 1.0)
                    } else {
                        let t = noise.sample(&mut rng);
                        if t == word {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let g = lr * (label - sigmoid(dot(doc_vecs.row(k), out_vecs.row(target))));
                    for (acc, o) in grad.iter_mut().zip(out_vecs.row(target)) {
                        *acc += g * o;
                    }
                    let doc = doc_vecs.row(k).to_vec();
                    for (o, x) in out_vecs.row_mut(target).iter_mut().zip(&doc) {
                        *o += g * x;
                    }
                }
                for (x, g) in doc_vecs.row_mut(k).iter_mut().zip(&grad) {
                    *x += g;
                }
            }
        }
    }
    if !doc_vecs.is_finite() {
        return Err(Error::Numeric("paragraph vectors diverged".into()));
    }
    Ok(ParagraphEmbeddings {
        owners: paragraphs.owners.clone(),
        matrix: doc_vecs,
    })
}
