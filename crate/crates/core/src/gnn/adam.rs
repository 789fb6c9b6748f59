//! Bias-corrected Adam.

use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<DenseMatrix>,
    pub v: Vec<DenseMatrix>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a DenseMatrix>) -> Self {
        let m: Vec<DenseMatrix> = params
            .into_iter()
            .map(|p| DenseMatrix::zeros(p.rows(), p.cols()))
            .collect();
        OptimizerState {
            v: m.clone(),
            m,
            step: 0,
        }
    }
}

pub fn adam_step(
    params: &mut [&mut DenseMatrix],
    grads: &[&DenseMatrix],
    state: &mut OptimizerState,
    cfg: &AdamConfig,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        assert_eq!(p.shape(), g.shape(), "gradient shape mismatch");
        let m = state.m[k].data_mut();
        let v = state.v[k].data_mut();
        for (((w, &gi), mi), vi) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_vec(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar(0.75);
        let g = scalar(0.0);
        let mut st = OptimizerState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut st, &AdamConfig::default());
        assert_eq!(p.get(0, 0), 0.75);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar(0.0);
        let g = scalar(1.0);
        let mut st = OptimizerState::new([&p]);
        let cfg = AdamConfig::default();
        adam_step(&mut [&mut p], &[&g], &mut st, &cfg);
        assert!((p.get(0, 0) + cfg.lr / (1.0 + cfg.eps)).abs() < 1e-15);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = || {
            let mut p = scalar(1.0);
            let mut st = OptimizerState::new([&p]);
            for _ in 0..50 {
                let g = scalar(2.0 * p.get(0, 0) - 0.3);
                adam_step(&mut [&mut p], &[&g], &mut st, &AdamConfig::default());
            }
            p.get(0, 0).to_bits()
        };
        assert_eq!(run(), run());
    }
}
