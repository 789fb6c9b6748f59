//! Link-prediction baseline: a two-layer encoder with an inner-product
//! decoder, scoring manufacturer-target pairs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::matrix::{dot, DenseMatrix};
use super::model::{encode, encode_backward, sigmoid, ModelKind, Structure};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{auc_pr, auc_roc};
use crate::graph::{Graph, NodeId, SplitRatios};

pub const MIN_POSITIVE_EDGES: usize = 10;

/// Probability that an edge joins two nodes with these embeddings.
pub fn link_score(h_u: &[f64], h_v: &[f64]) -> Result<f64> {
    if h_u.len() != h_v.len() {
        return Err(Error::Dimension(format!(
            "embedding widths differ: {} vs {}",
            h_u.len(),
            h_v.len()
        )));
    }
    Ok(sigmoid(dot(h_u, h_v)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub ratios: SplitRatios,
    pub train: TrainConfig,
}

type Pair = (NodeId, NodeId);

/// Held-out positive edges and sampled negatives for each split. The
/// message-passing graph keeps every edge except validation and test
/// positives.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    pub message_graph: Graph,
    pub train_pos: Vec<Pair>,
    pub valid_pos: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub train_neg: Vec<Pair>,
    pub valid_neg: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

impl LinkSplit {
    /// Splits manufacturer-target edges by `ratios` and draws the same
    /// number of manufacturer-target non-edges for each split.
    pub fn new(graph: &Graph, targets: &[NodeId], ratios: SplitRatios, seed: u64) -> Result<Self> {
        ratios.validate()?;
        for &t in targets {
            if t.index() >= graph.node_count() || graph.kind(t).is_manufacturer() {
                return Err(Error::Config(format!(
                    "link target {t} is not a service node"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for m in graph.manufacturers() {
            for &t in targets {
                if graph.has_edge(m, t) {
                    positives.push((m, t));
                } else {
                    negatives.push((m, t));
                }
            }
        }
        if positives.len() < MIN_POSITIVE_EDGES {
            return Err(Error::DegenerateClasses(format!(
                "link prediction needs at least {MIN_POSITIVE_EDGES} positive edges, found {}",
                positives.len()
            )));
        }
        positives.shuffle(&mut rng);
        negatives.shuffle(&mut rng);
        let (ntr, nva, nte) = ratios.counts(positives.len());
        if negatives.len() < positives.len() {
            return Err(Error::DegenerateClasses(format!(
                "only {} non-edges for {} positive edges",
                negatives.len(),
                positives.len()
            )));
        }
        let test_pos = positives.split_off(ntr + nva);
        let valid_pos = positives.split_off(ntr);
        let train_pos = positives;
        let mut negs = negatives.into_iter();
        let train_neg: Vec<Pair> = negs.by_ref().take(ntr).collect();
        let valid_neg: Vec<Pair> = negs.by_ref().take(nva).collect();
        let test_neg: Vec<Pair> = negs.by_ref().take(nte).collect();

        let held_out: Vec<Pair> = valid_pos.iter().chain(&test_pos).copied().collect();
        Ok(LinkSplit {
            message_graph: graph.without_edges(&held_out),
            train_pos,
            valid_pos,
            test_pos,
            train_neg,
            valid_neg,
            test_neg,
        })
    }

    fn labelled(pos: &[Pair], neg: &[Pair]) -> (Vec<Pair>, Vec<u8>) {
        let pairs = pos.iter().chain(neg).copied().collect();
        let labels = std::iter::repeat_n(1u8, pos.len())
            .chain(std::iter::repeat_n(0u8, neg.len()))
            .collect();
        (pairs, labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutcome {
    pub kind: ModelKind,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub test_auc_roc: f64,
    pub test_auc_pr: f64,
    pub epochs_run: usize,
}

fn pair_scores(emb: &DenseMatrix, pairs: &[Pair]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(u, v)| sigmoid(dot(emb.row(u.index()), emb.row(v.index()))))
        .collect()
}

/// Trains the encoder on training pairs (with the message-passing graph
/// from `split`) and evaluates on the held-out test pairs. `features`
/// must have one row per node of `split.message_graph`.
pub fn train_link_predictor(
    split: &LinkSplit,
    features: &DenseMatrix,
    config: &LinkConfig,
    kind: ModelKind,
) -> Result<LinkOutcome> {
    let tc = &config.train;
    tc.validate()?;
    let graph = &split.message_graph;
    if features.rows() != graph.node_count() {
        return Err(Error::Dimension(format!(
            "feature matrix has {} rows for {} nodes",
            features.rows(),
            graph.node_count()
        )));
    }
    let structure = Structure::for_model(kind, graph);
    let in_dim = features.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let (r1, r2) = match kind {
        ModelKind::GraphSage => (2 * in_dim, 2 * tc.hidden),
        ModelKind::Gcn => (in_dim, tc.hidden),
    };
    let mut w1 = DenseMatrix::glorot(r1, tc.hidden, &mut rng);
    let mut w2 = DenseMatrix::glorot(r2, tc.hidden, &mut rng);
    let mut state = OptimizerState::new([&w1, &w2]);

    let (train_pairs, train_labels) = LinkSplit::labelled(&split.train_pos, &split.train_neg);
    let (valid_pairs, valid_labels) = LinkSplit::labelled(&split.valid_pos, &split.valid_neg);
    let (test_pairs, test_labels) = LinkSplit::labelled(&split.test_pos, &split.test_neg);
    let n = train_pairs.len() as f64;

    let mut best: Option<(f64, DenseMatrix, DenseMatrix)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;
    for _ in 0..tc.max_epochs {
        epochs_run += 1;
        let pass = encode(&w1, &w2, features, &structure);
        let emb = &pass.embeddings;

        let val_auc = auc_roc(&pair_scores(emb, &valid_pairs), &valid_labels)?;
        if best.as_ref().is_none_or(|(b, _, _)| val_auc > *b) {
            best = Some((val_auc, w1.clone(), w2.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= tc.patience {
                break;
            }
        }

        let mut d_emb = DenseMatrix::zeros(emb.rows(), emb.cols());
        for (&(u, v), &y) in train_pairs.iter().zip(&train_labels) {
            let (hu, hv) = (emb.row(u.index()).to_vec(), emb.row(v.index()).to_vec());
            let dz = (sigmoid(dot(&hu, &hv)) - f64::from(y)) / n;
            for (d, h) in d_emb.row_mut(u.index()).iter_mut().zip(&hv) {
                *d += dz * h;
            }
            for (d, h) in d_emb.row_mut(v.index()).iter_mut().zip(&hu) {
                *d += dz * h;
            }
        }
        let [g1, g2] = encode_backward(&w1, &w2, &pass, &structure, &d_emb);
        if !g1.is_finite() || !g2.is_finite() {
            return Err(Error::Numeric("non-finite link-prediction gradient".into()));
        }
        adam_step(&mut [&mut w1, &mut w2], &[&g1, &g2], &mut state, &tc.adam);
    }
    if let Some((_, b1, b2)) = best {
        w1 = b1;
        w2 = b2;
    }
    let emb = encode(&w1, &w2, features, &structure).embeddings;
    let scores = pair_scores(&emb, &test_pairs);
    Ok(LinkOutcome {
        kind,
        test_auc_roc: auc_roc(&scores, &test_labels)?,
        test_auc_pr: auc_pr(&scores, &test_labels)?,
        w1,
        w2,
        epochs_run,
    })
}
