use std::collections::BTreeMap;

use super::{Gradients, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("sgd: lr must be non-negative, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!(
                "sgd: momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::config("sgd: weight_decay must be non-negative"));
        }
        Ok(())
    }
}

/// One heavy-ball step: `v ← μ·v + (g + λ·p)`, `p ← p − η·v`.
pub fn sgd_step<T: Scalar>(
    param: &Tensor<T>,
    grad: &Tensor<T>,
    velocity: &mut [T],
    cfg: &SgdConfig,
) -> Result<Tensor<T>> {
    if param.shape() != grad.shape() || velocity.len() != param.numel() {
        return Err(Error::config(format!(
            "sgd: parameter {:?}, gradient {:?} and velocity [{}] disagree",
            param.shape(),
            grad.shape(),
            velocity.len()
        )));
    }
    let lr = T::from_f64_lossy(cfg.lr);
    let mu = T::from_f64_lossy(cfg.momentum);
    let wd = T::from_f64_lossy(cfg.weight_decay);
    let out = param
        .data()
        .iter()
        .zip(grad.data())
        .zip(velocity.iter_mut())
        .map(|((&p, &g), v)| {
            *v = mu * *v + (g + wd * p);
            p - lr * *v
        })
        .collect();
    Tensor::new(param.shape().to_vec(), out)
}

/// SGD with per-parameter velocity buffers.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub config: SgdConfig,
    velocity: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(config: SgdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            velocity: BTreeMap::new(),
        })
    }

    /// Updates every parameter of `params`; `watched` is the tape-bound copy
    /// the gradients were computed for. Parameters that received no
    /// gradient are treated as having a zero gradient.
    pub fn step(&mut self, params: &mut ParamStore<T>, watched: &ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
        let names: Vec<String> = params.names().map(str::to_owned).collect();
        for name in names {
            let p = params.get(&name)?.clone();
            let g = grads.get_or_zeros(watched.get(&name)?);
            let v = self
                .velocity
                .entry(name.clone())
                .or_insert_with(|| vec![T::zero(); p.numel()]);
            let updated = sgd_step(&p, &g, v, &self.config)?;
            params.replace(&name, updated)?;
        }
        Ok(())
    }
}
