use serde::{Deserialize, Serialize};

use super::tensor::{Parameter, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay: `value -= lr * weight_decay * value` before the
    /// moment update.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Tensor,
    pub v: Tensor,
    pub t: u64,
}

impl AdamState {
    pub fn for_param(p: &Parameter) -> Self {
        AdamState {
            m: Tensor::zeros(p.value.shape()),
            v: Tensor::zeros(p.value.shape()),
            t: 0,
        }
    }
}

pub fn adam_step(p: &mut Parameter, s: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if !p.value.same_shape(&p.grad) || !p.value.same_shape(&s.m) || !s.m.same_shape(&s.v) {
        return Err(Error::dim(
            "adam_step",
            format!("{:?}", p.value.shape()),
            format!("{:?}/{:?}", p.grad.shape(), s.m.shape()),
        ));
    }
    s.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(s.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(s.t as i32);
    let decay = cfg.lr * cfg.weight_decay;
    let values = p.value.data_mut();
    let grads = p.grad.data();
    let (m, v) = (s.m.data_mut(), s.v.data_mut());
    for i in 0..values.len() {
        if decay != 0.0 {
            values[i] -= decay * values[i];
        }
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
