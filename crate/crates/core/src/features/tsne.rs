//! Exact t-SNE into the plane.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::DenseMatrix;

const BISECTION_STEPS: usize = 200;
const ENTROPY_TOL: f64 = 1e-10;
const MIN_AFFINITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    /// `None` picks min(30, (n-1)/3).
    pub perplexity: Option<f64>,
    pub iterations: usize,
    pub lr: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: None,
            iterations: 500,
            lr: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 100,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    /// Perplexity actually used for `n` points.
    pub fn effective_perplexity(&self, n: usize) -> Result<f64> {
        if n < 4 {
            return Err(Error::Config(format!(
                "t-SNE needs at least 4 points, got {n}"
            )));
        }
        let bound = (n as f64 - 1.0) / 3.0;
        let perp = self.perplexity.unwrap_or(bound.min(30.0));
        if !(perp > 0.0) || perp > bound {
            return Err(Error::Config(format!(
                "perplexity {perp} infeasible for {n} points (must lie in (0, {bound:.4}])"
            )));
        }
        Ok(perp)
    }
}

pub fn squared_distances(x: &DenseMatrix) -> Vec<f64> {
    let n = x.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row-stochastic conditional affinities p_{j|i}, each row's Gaussian
/// precision bisected so its entropy equals ln(perplexity).
pub fn conditional_affinities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let di = &dist[i * n..(i + 1) * n];
        let dmin = (0..n)
            .filter(|&j| j != i)
            .map(|j| di[j])
            .fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
        for _ in 0..BISECTION_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                row[j] = if j == i {
                    0.0
                } else {
                    (-(di[j] - dmin) * beta).exp()
                };
                sum += row[j];
                weighted += (di[j] - dmin) * row[j];
            }
            let entropy = sum.ln() + beta * weighted / sum;
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() {
                    (beta + hi) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        let sum: f64 = row.iter().sum();
        for j in 0..n {
            p[i * n + j] = row[j] / sum;
        }
    }
    p
}

/// Symmetrized joint affinities (p_{j|i} + p_{i|j}) / 2n, floored.
pub fn joint_affinities(cond: &[f64], n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] =
                    ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(MIN_AFFINITY);
            }
        }
    }
    p
}

/// KL(P || Q) with Q the Student-t affinities of `y`.
pub fn kl_divergence(p: &[f64], y: &DenseMatrix) -> f64 {
    let n = y.rows();
    let d = squared_distances(y);
    let z: f64 = (0..n * n)
        .filter(|k| k / n != k % n)
        .map(|k| 1.0 / (1.0 + d[k]))
        .sum();
    (0..n * n)
        .filter(|k| k / n != k % n && p[*k] > 0.0)
        .map(|k| {
            let q = (1.0 / (1.0 + d[k]) / z).max(MIN_AFFINITY);
            p[k] * (p[k] / q).ln()
        })
        .sum()
}

/// Plane coordinates together with the starting layout, so callers can
/// compare objective values before and after optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneRun {
    pub initial: DenseMatrix,
    pub embedding: DenseMatrix,
    pub perplexity: f64,
}

pub fn reduce_to_plane(x: &DenseMatrix, config: &TsneConfig) -> Result<DenseMatrix> {
    Ok(run_tsne(x, config)?.embedding)
}

pub fn run_tsne(x: &DenseMatrix, config: &TsneConfig) -> Result<TsneRun> {
    let n = x.rows();
    let perplexity = config.effective_perplexity(n)?;
    if !(config.lr > 0.0) {
        return Err(Error::Config(format!(
            "t-SNE lr must be positive, got {}",
            config.lr
        )));
    }
    let dist = squared_distances(x);
    let p = joint_affinities(&conditional_affinities(&dist, n, perplexity), n);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y = DenseMatrix::zeros(n, 2);
    for v in y.data_mut() {
        *v = normal.sample(&mut rng);
    }
    let initial = y.clone();
    let mut velocity = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![0.0; 2 * n];

    for it in 0..config.iterations {
        let exaggeration = if it < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if it < config.momentum_switch {
            0.5
        } else {
            0.8
        };
        let yd = y.data();
        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = yd[2 * i] - yd[2 * j];
                let dy = yd[2 * i + 1] - yd[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = w;
                num[j * n + i] = w;
                z += 2.0 * w;
            }
        }
        for i in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - w / z) * w;
                gx += coeff * (yd[2 * i] - yd[2 * j]);
                gy += coeff * (yd[2 * i + 1] - yd[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }
        let yd = y.data_mut();
        for k in 0..2 * n {
            gains[k] = if (grad[k] > 0.0) != (velocity[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(0.01)
            };
            velocity[k] = momentum * velocity[k] - config.lr * gains[k] * grad[k];
            yd[k] += velocity[k];
        }
        for c in 0..2 {
            let mean = (0..n).map(|i| yd[2 * i + c]).sum::<f64>() / n as f64;
            for i in 0..n {
                yd[2 * i + c] -= mean;
            }
        }
    }
    if !y.is_finite() {
        return Err(Error::Numeric("t-SNE layout diverged".into()));
    }
    Ok(TsneRun {
        initial,
        embedding: y,
        perplexity,
    })
}
