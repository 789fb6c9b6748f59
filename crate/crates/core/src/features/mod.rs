//! Node features: type codes plus a plane embedding of each
//! manufacturer's neighbor names.

mod paragraph;
mod tsne;

use serde::{Deserialize, Serialize};

pub use paragraph::{
    build_neighbor_paragraphs, train_paragraph_vectors, NeighborParagraphs, ParagraphConfig,
    ParagraphEmbeddings,
};
pub use tsne::{
    conditional_affinities, joint_affinities, kl_divergence, reduce_to_plane, run_tsne,
    squared_distances, TsneConfig, TsneRun,
};

use crate::error::{Error, Result};
use crate::gnn::DenseMatrix;
use crate::graph::{Graph, NodeId, NodeKind, TypeCodeVector};

pub const FEATURE_DIM: usize = 3;

/// Two coordinates per manufacturer, rows ordered like `owners`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneEmbedding {
    pub owners: Vec<NodeId>,
    pub matrix: DenseMatrix,
}

/// p x 3 matrix: type code, then the plane coordinates for manufacturers
/// and zeros for everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatureMatrix(pub DenseMatrix);

impl NodeFeatureMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }
}

pub fn integrate_features(
    codes: &TypeCodeVector,
    plane: &PlaneEmbedding,
    kinds: &[NodeKind],
) -> Result<NodeFeatureMatrix> {
    if codes.len() != kinds.len() {
        return Err(Error::Dimension(format!(
            "{} type codes for {} nodes",
            codes.len(),
            kinds.len()
        )));
    }
    if plane.matrix.cols() != 2 || plane.matrix.rows() != plane.owners.len() {
        return Err(Error::Dimension(format!(
            "plane embedding is {}x{} with {} owners",
            plane.matrix.rows(),
            plane.matrix.cols(),
            plane.owners.len()
        )));
    }
    let manufacturers: Vec<NodeId> = (0..kinds.len())
        .filter(|&j| kinds[j].is_manufacturer())
        .map(NodeId)
        .collect();
    if manufacturers != plane.owners {
        return Err(Error::Dimension(format!(
            "plane embedding covers {} rows, graph has {} manufacturers in a different order",
            plane.owners.len(),
            manufacturers.len()
        )));
    }
    let mut out = DenseMatrix::zeros(kinds.len(), FEATURE_DIM);
    for (j, &code) in codes.0.iter().enumerate() {
        out.set(j, 0, f64::from(code));
    }
    for (k, m) in plane.owners.iter().enumerate() {
        out.set(m.index(), 1, plane.matrix.get(k, 0));
        out.set(m.index(), 2, plane.matrix.get(k, 1));
    }
    Ok(NodeFeatureMatrix(out))
}

/// Features without the text channel: [code, 0, 0] on every row.
pub fn code_only_features(graph: &Graph) -> NodeFeatureMatrix {
    let mut out = DenseMatrix::zeros(graph.node_count(), FEATURE_DIM);
    for id in graph.ids() {
        out.set(id.index(), 0, f64::from(graph.kind(id).type_code()));
    }
    NodeFeatureMatrix(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub paragraph: ParagraphConfig,
    pub tsne: TsneConfig,
}

/// Every intermediate of the pipeline, kept for caching and inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArtifacts {
    pub paragraphs: NeighborParagraphs,
    pub f1: ParagraphEmbeddings,
    pub f2: PlaneEmbedding,
    pub features: NodeFeatureMatrix,
}

pub fn build_node_features(graph: &Graph, config: &FeatureConfig) -> Result<FeatureArtifacts> {
    let paragraphs = build_neighbor_paragraphs(graph);
    let f1 = train_paragraph_vectors(&paragraphs, &config.paragraph)?;
    let f2 = PlaneEmbedding {
        owners: f1.owners.clone(),
        matrix: reduce_to_plane(&f1.matrix, &config.tsne)?,
    };
    let kinds: Vec<NodeKind> = graph.ids().map(|id| graph.kind(id)).collect();
    let features = integrate_features(&graph.type_codes(), &f2, &kinds)?;
    Ok(FeatureArtifacts {
        paragraphs,
        f1,
        f2,
        features,
    })
}
