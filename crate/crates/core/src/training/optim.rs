use serde::{Deserialize, Serialize};

use crate::nn::ModelParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }
}

/// One AdamW update from the gradients stored in `params`:
/// `θ ← θ − lr·wd·θ − lr·m̂/(√v̂ + ε)` with bias-corrected moments.
pub fn adamw_step(params: &mut ModelParams, state: &mut OptimState, lr: f64, weight_decay: f64) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (k, tensor) in params.tensors.iter_mut().enumerate() {
        let (m, v) = (&mut state.first[k], &mut state.second[k]);
        for ((theta, &g), (mi, vi)) in tensor
            .values
            .iter_mut()
            .zip(&tensor.grad)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
            *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *theta -= lr * weight_decay * *theta + lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}
