//! Class-weighted binary cross-entropy.

use crate::error::{Error, Result};
use crate::graph::NodeId;

pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// dL/dP for every node; zero outside the mask and where clamping is active.
    pub d_probs: Vec<f64>,
}

/// `-(1/|mask|) Σ w_y [y log P + (1-y) log(1-P)]` over the masked nodes,
/// with `P` clamped to `[1e-7, 1 - 1e-7]`.
pub fn weighted_bce_loss(
    probs: &[f64],
    labels: &[u8],
    mask: &[NodeId],
    class_weights: [f64; 2],
) -> Result<LossValue> {
    if mask.is_empty() {
        return Err(Error::Config("loss mask is empty".into()));
    }
    let n = mask.len() as f64;
    let mut loss = 0.0;
    let mut d_probs = vec![0.0; probs.len()];
    for &id in mask {
        let j = id.index();
        let y = labels[j];
        let w = class_weights[y as usize];
        let raw = probs[j];
        let p = raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let clamped = p != raw;
        if y == 1 {
            loss -= w * p.ln();
            if !clamped {
                d_probs[j] = -w / (p * n);
            }
        } else {
            loss -= w * (1.0 - p).ln();
            if !clamped {
                d_probs[j] = w / ((1.0 - p) * n);
            }
        }
    }
    Ok(LossValue {
        loss: loss / n,
        d_probs,
    })
}

/// Weights inversely proportional to class frequency on `mask`:
/// `w_c = |mask| / (2 · n_c)`.
pub fn balanced_class_weights(labels: &[u8], mask: &[NodeId]) -> Result<[f64; 2]> {
    let mut counts = [0usize; 2];
    for id in mask {
        counts[labels[id.index()] as usize] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::DegenerateClasses(format!(
            "training mask has {} negatives and {} positives",
            counts[0], counts[1]
        )));
    }
    let n = mask.len() as f64;
    Ok([n / (2.0 * counts[0] as f64), n / (2.0 * counts[1] as f64)])
}
