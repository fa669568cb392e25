use serde::{Deserialize, Serialize};

use super::loss::GradBundle;
use super::model::PolicyParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Adam moments and step counter, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: PolicyParams,
    pub v: PolicyParams,
    pub t: u64,
    pub config: AdamConfig,
}

impl OptimizerState {
    pub fn new(params: &PolicyParams, config: AdamConfig) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            config,
        }
    }

    /// In-place Adam update with bias correction. Refuses (and leaves
    /// everything untouched) on non-finite gradients.
    pub fn apply(&mut self, params: &mut PolicyParams, grads: &GradBundle) -> Result<()> {
        if params.shape != grads.grad.shape || params.shape != self.m.shape {
            return Err(Error::InvalidArgument(
                "optimizer/parameter/gradient shapes differ".into(),
            ));
        }
        if !grads.grad.iter().all(f64::is_finite) {
            return Err(Error::NumericFault("non-finite gradient; update refused".into()));
        }
        if !(self.config.lr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.config.lr
            )));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let gs = grads.grad.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        let ps = params.tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Functional form of [`OptimizerState::apply`].
pub fn adam_step(
    params: &PolicyParams,
    grads: &GradBundle,
    opt: &OptimizerState,
) -> Result<(PolicyParams, OptimizerState)> {
    let mut params = params.clone();
    let mut opt = opt.clone();
    opt.apply(&mut params, grads)?;
    Ok((params, opt))
}
