//! Node classifiers, link predictor and their training loops.

mod adam;
mod checkpoint;
mod link;
mod loss;
mod matrix;
mod model;
mod ops;
mod train;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use link::{link_score, train_link_predictor, LinkConfig, LinkOutcome, LinkSplit};
pub use loss::{balanced_class_weights, weighted_bce_loss, LossValue, PROB_CLAMP};
pub use matrix::{dot, DenseMatrix};
pub use model::{
    backward, encode, encode_backward, forward, gcn_forward, min_relu_margin, sage_forward,
    sigmoid, EncoderPass, ForwardPass, Gradients, HeadOptions, ModelKind, ModelParameters,
    Structure,
};
pub use ops::{
    aggregate, aggregate_backward, neighborhood_mean, Aggregation, GcnOperator, Neighborhoods,
};
pub use train::{
    predict_labels, predict_probabilities, train_node_classifier, EpochLog, TrainConfig,
    TrainedModel,
};
