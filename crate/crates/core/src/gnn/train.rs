//! Full-batch training loop for the node classifiers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, OptimizerState};
use super::loss::{balanced_class_weights, weighted_bce_loss};
use super::matrix::DenseMatrix;
use super::model::{backward, forward, HeadOptions, ModelKind, ModelParameters, Structure};
use super::ops::Neighborhoods;
use crate::error::{Error, Result};
use crate::eval::auc_roc;
use crate::graph::{Graph, NodeId, Split};
use crate::seng::AugmentedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub hidden: usize,
    /// `None` weights classes inversely to their training frequency.
    pub class_weights: Option<[f64; 2]>,
    /// Neighbor cap per node and epoch; `None` uses full neighborhoods.
    pub fanout: Option<usize>,
    pub threshold: f64,
    pub seed: u64,
    /// Epochs without validation AUC-ROC improvement before stopping.
    pub patience: usize,
    pub head: HeadOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            max_epochs: 415,
            hidden: 16,
            class_weights: None,
            fanout: None,
            threshold: 0.5,
            seed: 0,
            patience: 50,
            head: HeadOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.adam.lr
            )));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        if let Some(w) = self.class_weights {
            if w.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Config(format!(
                    "class weights must be positive, got {w:?}"
                )));
            }
        }
        if self.fanout == Some(0) {
            return Err(Error::Config("fanout must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc_roc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParameters,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept (`None` when no epoch ran).
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
}

fn validation_auc(probs: &[f64], labels: &[u8], valid: &[NodeId]) -> Option<f64> {
    let scores: Vec<f64> = valid.iter().map(|id| probs[id.index()]).collect();
    let ys: Vec<u8> = valid.iter().map(|id| labels[id.index()]).collect();
    auc_roc(&scores, &ys).ok()
}

/// Trains on the training split of `graph`, keeping the parameters with
/// the best validation AUC-ROC.
pub fn train_node_classifier(
    graph: &AugmentedGraph,
    features: &DenseMatrix,
    config: &TrainConfig,
    kind: ModelKind,
) -> Result<TrainedModel> {
    config.validate()?;
    let labels = &graph.labels;
    let train: Vec<NodeId> = graph.split.nodes_in(Split::Train).collect();
    let valid: Vec<NodeId> = graph.split.nodes_in(Split::Valid).collect();
    let auto_weights = balanced_class_weights(labels, &train)?;
    let class_weights = config.class_weights.unwrap_or(auto_weights);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params =
        ModelParameters::init(kind, features.cols(), config.hidden, config.head, &mut rng);
    let full = Structure::for_model(kind, &graph.graph);
    if features.rows() != graph.graph.node_count() {
        return Err(Error::Dimension(format!(
            "feature matrix has {} rows for {} nodes",
            features.rows(),
            graph.graph.node_count()
        )));
    }

    let mut state = OptimizerState::new(params.weights());
    let mut log = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, ModelParameters)> = None;
    let mut since_best = 0usize;

    for epoch in 0..config.max_epochs {
        let sampled = match (kind, config.fanout) {
            (ModelKind::GraphSage, Some(f)) => Some(Structure::Sage(Neighborhoods::sampled(
                &graph.graph,
                f,
                &mut rng,
            ))),
            _ => None,
        };
        let structure = sampled.as_ref().unwrap_or(&full);
        let pass = forward(&params, features, structure)?;
        let loss = weighted_bce_loss(&pass.probs, labels, &train, class_weights)?;
        if !loss.loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite training loss at epoch {epoch}"
            )));
        }
        let val_auc = if sampled.is_some() {
            validation_auc(&forward(&params, features, &full)?.probs, labels, &valid)
        } else {
            validation_auc(&pass.probs, labels, &valid)
        };
        log.push(EpochLog {
            epoch,
            train_loss: loss.loss,
            val_auc_roc: val_auc,
        });

        if let Some(auc) = val_auc {
            if best.as_ref().is_none_or(|(b, _, _)| auc > *b) {
                best = Some((auc, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }

        let grads = backward(&params, &pass, structure, &loss.d_probs);
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient at epoch {epoch}"
            )));
        }
        let grad_refs: Vec<&DenseMatrix> = grads.iter().collect();
        adam_step(
            &mut params.weights_mut(),
            &grad_refs,
            &mut state,
            &config.adam,
        );
    }

    let epochs_run = log.len();
    let (best_epoch, params) = match best {
        Some((_, epoch, p)) => (Some(epoch), p),
        None => (epochs_run.checked_sub(1), params),
    };
    Ok(TrainedModel {
        params,
        log,
        best_epoch,
        epochs_run,
    })
}

/// Probabilities for every node, using full neighborhoods.
pub fn predict_probabilities(
    params: &ModelParameters,
    graph: &Graph,
    features: &DenseMatrix,
) -> Result<Vec<f64>> {
    let structure = Structure::for_model(params.kind, graph);
    Ok(forward(params, features, &structure)?.probs)
}

/// Label 1 exactly when the probability is strictly above `threshold`.
pub fn predict_labels(probs: &[f64], threshold: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p > threshold)).collect()
}
