//! Optimizers: Adam and momentum SGD with global gradient-norm clipping.
//!
//! Both step functions consume the gradients currently in the store (zeroing
//! them afterwards) and refuse to apply non-finite updates.

use crate::scalar::Scalar;
use crate::{NnError, ParamStore, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam step over every parameter in the store.
pub fn adam_step<S: Scalar>(ps: &mut ParamStore<S>, cfg: &AdamConfig) -> Result<()> {
    for e in ps.entries() {
        if !e.grad.iter().all(|g| g.is_finite()) {
            return Err(NnError::NumericFault {
                layer: e.name.clone(),
            });
        }
    }
    ps.t += 1;
    let t = ps.t as i32;
    let b1 = S::from_f64(cfg.beta1);
    let b2 = S::from_f64(cfg.beta2);
    let one_minus_b1 = S::from_f64(1.0 - cfg.beta1);
    let one_minus_b2 = S::from_f64(1.0 - cfg.beta2);
    let corr1 = S::from_f64(1.0 - cfg.beta1.powi(t));
    let corr2 = S::from_f64(1.0 - cfg.beta2.powi(t));
    let lr = S::from_f64(cfg.lr);
    let eps = S::from_f64(cfg.eps);

    for e in ps.entries_mut() {
        let len = e.value.len();
        let m = e.adam_m.get_or_insert_with(|| vec![S::ZERO; len]);
        let v = e.adam_v.get_or_insert_with(|| vec![S::ZERO; len]);
        for i in 0..len {
            let g = e.grad[i];
            m[i] = b1 * m[i] + one_minus_b1 * g;
            v[i] = b2 * v[i] + one_minus_b2 * g * g;
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            e.value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            e.grad[i] = S::ZERO;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    /// Global L2 gradient-norm clip; `f64::INFINITY` disables clipping.
    pub clip_norm: f64,
}

/// Momentum SGD with global gradient-norm clipping:
/// `vel = momentum * vel + g_clipped; p -= lr * vel`.
pub fn sgd_step<S: Scalar>(ps: &mut ParamStore<S>, cfg: &SgdConfig) -> Result<()> {
    for e in ps.entries() {
        if !e.grad.iter().all(|g| g.is_finite()) {
            return Err(NnError::NumericFault {
                layer: e.name.clone(),
            });
        }
    }
    let norm = ps.grad_sq_norm().sqrt();
    let scale = if norm > cfg.clip_norm {
        cfg.clip_norm / norm
    } else {
        1.0
    };
    let scale = S::from_f64(scale);
    let momentum = S::from_f64(cfg.momentum);
    let lr = S::from_f64(cfg.lr);
    ps.t += 1;
    for e in ps.entries_mut() {
        let len = e.value.len();
        let vel = e.sgd_vel.get_or_insert_with(|| vec![S::ZERO; len]);
        for i in 0..len {
            let g = e.grad[i] * scale;
            vel[i] = momentum * vel[i] + g;
            e.value[i] -= lr * vel[i];
            e.grad[i] = S::ZERO;
        }
    }
    Ok(())
}
