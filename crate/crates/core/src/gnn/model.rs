//! GraphSAGE and GCN node classifiers with hand-written reverse mode.
//!
//! Row-vector convention throughout: a layer computes `concat · W`, so
//! `W1` is `(2·in) × hidden` for GraphSAGE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use super::ops::{aggregate, aggregate_backward, Aggregation, GcnOperator, Neighborhoods};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(alias = "sage")]
    GraphSage,
    Gcn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::GraphSage => "graphsage",
            ModelKind::Gcn => "gcn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphsage" | "sage" => Ok(ModelKind::GraphSage),
            "gcn" => Ok(ModelKind::Gcn),
            other => Err(Error::Config(format!(
                "unknown encoder {other:?} (expected sage or gcn)"
            ))),
        }
    }
}

/// Output-head variants for the GraphSAGE classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadOptions {
    /// ReLU between the output projection and the sigmoid.
    pub relu: bool,
    /// Sum (true) or mean (false) of neighbor layer-2 embeddings.
    pub neighbor_sum: bool,
}

impl Default for HeadOptions {
    fn default() -> Self {
        HeadOptions {
            relu: true,
            neighbor_sum: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub kind: ModelKind,
    pub hidden: usize,
    pub head: HeadOptions,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub w3: DenseMatrix,
}

pub type Gradients = [DenseMatrix; 3];

impl ModelParameters {
    fn shapes(kind: ModelKind, in_dim: usize, hidden: usize) -> [(usize, usize); 3] {
        match kind {
            ModelKind::GraphSage => [(2 * in_dim, hidden), (2 * hidden, hidden), (2 * hidden, 1)],
            ModelKind::Gcn => [(in_dim, hidden), (hidden, hidden), (hidden, 1)],
        }
    }

    /// Glorot-uniform initialization.
    pub fn init<R: Rng>(
        kind: ModelKind,
        in_dim: usize,
        hidden: usize,
        head: HeadOptions,
        rng: &mut R,
    ) -> Self {
        let [s1, s2, s3] = Self::shapes(kind, in_dim, hidden);
        ModelParameters {
            kind,
            hidden,
            head,
            w1: DenseMatrix::glorot(s1.0, s1.1, rng),
            w2: DenseMatrix::glorot(s2.0, s2.1, rng),
            w3: DenseMatrix::glorot(s3.0, s3.1, rng),
        }
    }

    pub fn zeros(kind: ModelKind, in_dim: usize, hidden: usize, head: HeadOptions) -> Self {
        let [s1, s2, s3] = Self::shapes(kind, in_dim, hidden);
        ModelParameters {
            kind,
            hidden,
            head,
            w1: DenseMatrix::zeros(s1.0, s1.1),
            w2: DenseMatrix::zeros(s2.0, s2.1),
            w3: DenseMatrix::zeros(s3.0, s3.1),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.kind {
            ModelKind::GraphSage => self.w1.rows() / 2,
            ModelKind::Gcn => self.w1.rows(),
        }
    }

    pub fn weights(&self) -> [&DenseMatrix; 3] {
        [&self.w1, &self.w2, &self.w3]
    }

    pub fn weights_mut(&mut self) -> [&mut DenseMatrix; 3] {
        [&mut self.w1, &mut self.w2, &mut self.w3]
    }

    pub fn validate(&self) -> Result<()> {
        let expected = Self::shapes(self.kind, self.input_dim(), self.hidden);
        for (i, (w, s)) in self.weights().iter().zip(expected).enumerate() {
            if w.shape() != s {
                return Err(Error::Dimension(format!(
                    "W{} is {:?}, expected {:?} for {} with hidden width {}",
                    i + 1,
                    w.shape(),
                    s,
                    self.kind.as_str(),
                    self.hidden
                )));
            }
        }
        Ok(())
    }
}

/// Message-passing structure matching a model kind.
#[derive(Debug, Clone)]
pub enum Structure {
    Sage(Neighborhoods),
    Gcn(GcnOperator),
}

impl Structure {
    pub fn for_model(kind: ModelKind, graph: &Graph) -> Self {
        match kind {
            ModelKind::GraphSage => Structure::Sage(Neighborhoods::full(graph)),
            ModelKind::Gcn => Structure::Gcn(GcnOperator::new(graph)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Structure::Sage(nb) => nb.len(),
            Structure::Gcn(op) => op.node_count(),
        }
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// Layer input (GCN) or `[x | agg(x)]` (GraphSAGE).
    input: DenseMatrix,
    pre: DenseMatrix,
    relu: bool,
}

fn relu_mask(grad: &mut DenseMatrix, pre: &DenseMatrix) {
    for (g, &z) in grad.data_mut().iter_mut().zip(pre.data()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

fn sage_layer(
    x: &DenseMatrix,
    nb: &Neighborhoods,
    w: &DenseMatrix,
    agg: Aggregation,
    relu: bool,
) -> (DenseMatrix, LayerCache) {
    let input = x.hstack(&aggregate(x, nb, agg));
    let pre = input.matmul(w);
    let mut out = pre.clone();
    if relu {
        out.relu_inplace();
    }
    (out, LayerCache { input, pre, relu })
}

fn sage_layer_backward(
    cache: &LayerCache,
    dout: &DenseMatrix,
    nb: &Neighborhoods,
    w: &DenseMatrix,
    agg: Aggregation,
    need_dx: bool,
) -> (DenseMatrix, Option<DenseMatrix>) {
    let mut dpre = dout.clone();
    if cache.relu {
        relu_mask(&mut dpre, &cache.pre);
    }
    let dw = cache.input.t_matmul(&dpre);
    if !need_dx {
        return (dw, None);
    }
    let dinput = dpre.matmul_t(w);
    let (mut dx, dagg) = dinput.split_cols(w.rows() / 2);
    dx.add_assign(&aggregate_backward(&dagg, nb, agg));
    (dw, Some(dx))
}

fn gcn_layer(
    x: &DenseMatrix,
    op: &GcnOperator,
    w: &DenseMatrix,
    relu: bool,
) -> (DenseMatrix, LayerCache) {
    let pre = op.propagate(&x.matmul(w));
    let mut out = pre.clone();
    if relu {
        out.relu_inplace();
    }
    (
        out,
        LayerCache {
            input: x.clone(),
            pre,
            relu,
        },
    )
}

fn gcn_layer_backward(
    cache: &LayerCache,
    dout: &DenseMatrix,
    op: &GcnOperator,
    w: &DenseMatrix,
    need_dx: bool,
) -> (DenseMatrix, Option<DenseMatrix>) {
    let mut dpre = dout.clone();
    if cache.relu {
        relu_mask(&mut dpre, &cache.pre);
    }
    let dxw = op.propagate(&dpre);
    let dw = cache.input.t_matmul(&dxw);
    let dx = need_dx.then(|| dxw.matmul_t(w));
    (dw, dx)
}

/// Everything a backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub h1: DenseMatrix,
    pub h2: DenseMatrix,
    /// Head output before the sigmoid.
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    caches: [LayerCache; 3],
}

fn check_inputs(
    params: &ModelParameters,
    features: &DenseMatrix,
    structure: &Structure,
) -> Result<()> {
    params.validate()?;
    if features.cols() != params.input_dim() {
        return Err(Error::Dimension(format!(
            "features have {} columns, model expects {}",
            features.cols(),
            params.input_dim()
        )));
    }
    if features.rows() != structure.node_count() {
        return Err(Error::Dimension(format!(
            "features have {} rows for a graph of {} nodes",
            features.rows(),
            structure.node_count()
        )));
    }
    match (params.kind, structure) {
        (ModelKind::GraphSage, Structure::Sage(_)) | (ModelKind::Gcn, Structure::Gcn(_)) => Ok(()),
        _ => Err(Error::Config(
            "model kind does not match message-passing structure".into(),
        )),
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn forward(
    params: &ModelParameters,
    features: &DenseMatrix,
    structure: &Structure,
) -> Result<ForwardPass> {
    check_inputs(params, features, structure)?;
    let (h1, h2, head, caches) = match structure {
        Structure::Sage(nb) => {
            let (h1, c1) = sage_layer(features, nb, &params.w1, Aggregation::Mean, true);
            let (h2, c2) = sage_layer(&h1, nb, &params.w2, Aggregation::Mean, true);
            let agg = if params.head.neighbor_sum {
                Aggregation::Sum
            } else {
                Aggregation::Mean
            };
            let (z, c3) = sage_layer(&h2, nb, &params.w3, agg, params.head.relu);
            (h1, h2, z, [c1, c2, c3])
        }
        Structure::Gcn(op) => {
            let (h1, c1) = gcn_layer(features, op, &params.w1, true);
            let (h2, c2) = gcn_layer(&h1, op, &params.w2, true);
            let pre = h2.matmul(&params.w3);
            let c3 = LayerCache {
                input: h2.clone(),
                pre: pre.clone(),
                relu: false,
            };
            (h1, h2, pre, [c1, c2, c3])
        }
    };
    let logits = head.data().to_vec();
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardPass {
        h1,
        h2,
        logits,
        probs,
        caches,
    })
}

/// Gradients of a scalar loss with respect to `W1, W2, W3`, given the
/// loss gradient with respect to each probability.
pub fn backward(
    params: &ModelParameters,
    pass: &ForwardPass,
    structure: &Structure,
    d_probs: &[f64],
) -> Gradients {
    let dz: Vec<f64> = d_probs
        .iter()
        .zip(&pass.probs)
        .map(|(g, p)| g * p * (1.0 - p))
        .collect();
    let dz = DenseMatrix::from_vec(dz.len(), 1, dz).expect("one logit per node");
    let [c1, c2, c3] = &pass.caches;
    match structure {
        Structure::Sage(nb) => {
            let agg = if params.head.neighbor_sum {
                Aggregation::Sum
            } else {
                Aggregation::Mean
            };
            let (dw3, dh2) = sage_layer_backward(c3, &dz, nb, &params.w3, agg, true);
            let (dw2, dh1) =
                sage_layer_backward(c2, &dh2.unwrap(), nb, &params.w2, Aggregation::Mean, true);
            let (dw1, _) =
                sage_layer_backward(c1, &dh1.unwrap(), nb, &params.w1, Aggregation::Mean, false);
            [dw1, dw2, dw3]
        }
        Structure::Gcn(op) => {
            let dw3 = c3.input.t_matmul(&dz);
            let dh2 = dz.matmul_t(&params.w3);
            let (dw2, dh1) = gcn_layer_backward(c2, &dh2, op, &params.w2, true);
            let (dw1, _) = gcn_layer_backward(c1, &dh1.unwrap(), op, &params.w1, false);
            [dw1, dw2, dw3]
        }
    }
}

/// GraphSAGE forward returning `(h1, h2, P)`.
pub fn sage_forward(
    features: &DenseMatrix,
    nb: &Neighborhoods,
    params: &ModelParameters,
) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    let pass = forward(params, features, &Structure::Sage(nb.clone()))?;
    Ok((pass.h1, pass.h2, pass.probs))
}

pub fn gcn_forward(
    features: &DenseMatrix,
    op: &GcnOperator,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    Ok(forward(params, features, &Structure::Gcn(op.clone()))?.probs)
}

/// Two-layer encoder for link prediction: the second layer is linear so
/// embeddings can take either sign.
#[derive(Debug, Clone)]
pub struct EncoderPass {
    pub embeddings: DenseMatrix,
    caches: [LayerCache; 2],
}

pub fn encode(
    w1: &DenseMatrix,
    w2: &DenseMatrix,
    features: &DenseMatrix,
    structure: &Structure,
) -> EncoderPass {
    let (emb, caches) = match structure {
        Structure::Sage(nb) => {
            let (h1, c1) = sage_layer(features, nb, w1, Aggregation::Mean, true);
            let (h2, c2) = sage_layer(&h1, nb, w2, Aggregation::Mean, false);
            (h2, [c1, c2])
        }
        Structure::Gcn(op) => {
            let (h1, c1) = gcn_layer(features, op, w1, true);
            let (h2, c2) = gcn_layer(&h1, op, w2, false);
            (h2, [c1, c2])
        }
    };
    EncoderPass {
        embeddings: emb,
        caches,
    }
}

pub fn encode_backward(
    w1: &DenseMatrix,
    w2: &DenseMatrix,
    pass: &EncoderPass,
    structure: &Structure,
    d_emb: &DenseMatrix,
) -> [DenseMatrix; 2] {
    let [c1, c2] = &pass.caches;
    match structure {
        Structure::Sage(nb) => {
            let (dw2, dh1) = sage_layer_backward(c2, d_emb, nb, w2, Aggregation::Mean, true);
            let (dw1, _) = sage_layer_backward(c1, &dh1.unwrap(), nb, w1, Aggregation::Mean, false);
            [dw1, dw2]
        }
        Structure::Gcn(op) => {
            let (dw2, dh1) = gcn_layer_backward(c2, d_emb, op, w2, true);
            let (dw1, _) = gcn_layer_backward(c1, &dh1.unwrap(), op, w1, false);
            [dw1, dw2]
        }
    }
}

/// Smallest absolute pre-activation over every ReLU in the pass; a finite
/// difference step below this cannot cross a kink.
pub fn min_relu_margin(pass: &ForwardPass) -> f64 {
    pass.caches
        .iter()
        .filter(|c| c.relu)
        .flat_map(|c| c.pre.data().iter())
        .fold(f64::INFINITY, |m, v| m.min(v.abs()))
}
