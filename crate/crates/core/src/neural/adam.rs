use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam update applied in place. Increments `store.step` once.
pub fn adam_step(store: &mut ParamStore, grads: &Gradients, lr: f64, cfg: &AdamConfig) -> Result<()> {
    if grads.tensors.len() != store.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} gradients for {} parameters", grads.tensors.len(), store.len()),
        ));
    }
    for (p, g) in store.iter().zip(&grads.tensors) {
        if p.value.shape() != g.shape() {
            return Err(Error::shape(
                "adam_step",
                format!("gradient for {} is {:?}, parameter is {:?}", p.name, g.shape(), p.value.shape()),
            ));
        }
    }
    store.step += 1;
    let t = store.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (p, g) in store.iter_mut().zip(&grads.tensors) {
        let m = p.first_moment.data_mut();
        let v = p.second_moment.data_mut();
        let w = p.value.data_mut();
        for i in 0..w.len() {
            let gi = g.data()[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
