//! Neighborhood aggregation and GCN propagation, each with its adjoint.

use rand::seq::SliceRandom;
use rand::Rng;

use super::matrix::DenseMatrix;
use crate::graph::{Graph, NodeId};

/// Neighbor lists used by one forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhoods {
    lists: Vec<Vec<usize>>,
}

impl Neighborhoods {
    pub fn full(graph: &Graph) -> Self {
        Neighborhoods {
            lists: graph
                .ids()
                .map(|id| graph.neighbors(id).iter().map(|n| n.index()).collect())
                .collect(),
        }
    }

    /// At most `fanout` neighbors per node, drawn without replacement.
    pub fn sampled<R: Rng>(graph: &Graph, fanout: usize, rng: &mut R) -> Self {
        let lists = graph
            .ids()
            .map(|id| {
                let nb = graph.neighbors(id);
                if nb.len() <= fanout {
                    nb.iter().map(|n| n.index()).collect()
                } else {
                    let mut pick: Vec<usize> =
                        nb.choose_multiple(rng, fanout).map(|n| n.index()).collect();
                    pick.sort_unstable();
                    pick
                }
            })
            .collect();
        Neighborhoods { lists }
    }

    pub fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        Neighborhoods { lists }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn of(&self, j: usize) -> &[usize] {
        &self.lists[j]
    }
}

/// Mean of the neighbor rows of node `j`; zero when `j` has no neighbors.
pub fn neighborhood_mean(features: &DenseMatrix, nb: &Neighborhoods, j: NodeId) -> Vec<f64> {
    let mut out = vec![0.0; features.cols()];
    let list = nb.of(j.index());
    if list.is_empty() {
        return out;
    }
    for &u in list {
        for (o, v) in out.iter_mut().zip(features.row(u)) {
            *o += v;
        }
    }
    let inv = 1.0 / list.len() as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Sum,
}

pub fn aggregate(x: &DenseMatrix, nb: &Neighborhoods, how: Aggregation) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for j in 0..x.rows() {
        let list = nb.of(j);
        if list.is_empty() {
            continue;
        }
        let row = out.row_mut(j);
        for &u in list {
            for (o, v) in row.iter_mut().zip(x.row(u)) {
                *o += v;
            }
        }
        if how == Aggregation::Mean {
            let inv = 1.0 / list.len() as f64;
            row.iter_mut().for_each(|o| *o *= inv);
        }
    }
    out
}

/// Adjoint of [`aggregate`]: scatters each row's gradient back onto the
/// neighbors it was gathered from.
pub fn aggregate_backward(grad: &DenseMatrix, nb: &Neighborhoods, how: Aggregation) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(grad.rows(), grad.cols());
    for j in 0..grad.rows() {
        let list = nb.of(j);
        if list.is_empty() {
            continue;
        }
        let scale = match how {
            Aggregation::Mean => 1.0 / list.len() as f64,
            Aggregation::Sum => 1.0,
        };
        let g: Vec<f64> = grad.row(j).iter().map(|v| v * scale).collect();
        for &u in list {
            for (o, v) in out.row_mut(u).iter_mut().zip(&g) {
                *o += v;
            }
        }
    }
    out
}

/// `D^{-1/2} (A + I) D^{-1/2}` in sparse form, degrees counting the self-loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnOperator {
    lists: Vec<Vec<usize>>,
    inv_sqrt_deg: Vec<f64>,
}

impl GcnOperator {
    pub fn new(graph: &Graph) -> Self {
        let lists: Vec<Vec<usize>> = graph
            .ids()
            .map(|id| graph.neighbors(id).iter().map(|n| n.index()).collect())
            .collect();
        let inv_sqrt_deg = lists
            .iter()
            .map(|l| 1.0 / ((l.len() + 1) as f64).sqrt())
            .collect();
        GcnOperator {
            lists,
            inv_sqrt_deg,
        }
    }

    /// Operator weight between `j` and `u` (either equal or adjacent).
    pub fn weight(&self, j: usize, u: usize) -> f64 {
        if j == u || self.lists[j].binary_search(&u).is_ok() {
            self.inv_sqrt_deg[j] * self.inv_sqrt_deg[u]
        } else {
            0.0
        }
    }

    pub fn node_count(&self) -> usize {
        self.lists.len()
    }

    /// `Â · x`. The operator is symmetric, so this is also its adjoint.
    pub fn propagate(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(x.rows(), x.cols());
        for j in 0..x.rows() {
            let dj = self.inv_sqrt_deg[j];
            let row = out.row_mut(j);
            for (o, v) in row.iter_mut().zip(x.row(j)) {
                *o += dj * dj * v;
            }
            for &u in &self.lists[j] {
                let w = dj * self.inv_sqrt_deg[u];
                for (o, v) in row.iter_mut().zip(x.row(u)) {
                    *o += w * v;
                }
            }
        }
        out
    }
}
