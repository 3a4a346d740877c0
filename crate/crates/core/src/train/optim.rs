use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ParamSet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub accumulation: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            momentum: 0.9,
            weight_decay: 1e-8,
            accumulation: 8,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid SGD settings: {self:?}")));
        }
        if self.accumulation == 0 {
            return Err(Error::InvalidConfig("accumulation must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let betas = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !(self.lr >= 0.0) || !betas || !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid Adam settings: {self:?}")));
        }
        Ok(())
    }
}

fn check_len<T: Scalar, P: ParamSet<T>>(params: &P, grads: &P) -> Result<()> {
    if params.shapes() != grads.shapes() {
        return Err(Error::DimensionMismatch(
            "gradient set does not match parameter shapes".into(),
        ));
    }
    Ok(())
}

/// Momentum SGD over gradients accumulated from several mini-batches.
///
/// Per step: `g = sum(batch grads) + 2 * wd * theta`, `v = m * v + g`,
/// `theta -= lr * v`. Batch gradients are summed in the order given.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub cfg: SgdConfig,
    velocity: Vec<T>,
    steps: u64,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(cfg: SgdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            velocity: Vec::new(),
            steps: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    /// One update from exactly `accumulation` gradient sets.
    pub fn accumulate_step<P: ParamSet<T>>(&mut self, params: &mut P, batches: &[P]) -> Result<()> {
        if batches.len() != self.cfg.accumulation {
            return Err(Error::InvalidInput(format!(
                "{} gradient batches for accumulation {}",
                batches.len(),
                self.cfg.accumulation
            )));
        }
        for b in batches {
            check_len(params, b)?;
        }
        let n = params.param_count();
        let mut total = vec![T::zero(); n];
        for b in batches {
            let mut off = 0;
            b.visit(&mut |_, g| {
                for (t, &v) in total[off..off + g.len()].iter_mut().zip(g) {
                    *t += v;
                }
                off += g.len();
            });
        }
        if self.velocity.len() != n {
            self.velocity = vec![T::zero(); n];
        }
        let (lr, m, wd2) = (T::c(self.cfg.lr), T::c(self.cfg.momentum), T::c(2.0 * self.cfg.weight_decay));
        let velocity = &mut self.velocity;
        let mut off = 0;
        params.visit_mut(&mut |_, p| {
            for (i, theta) in p.iter_mut().enumerate() {
                let j = off + i;
                let g = total[j] + wd2 * *theta;
                velocity[j] = m * velocity[j] + g;
                *theta -= lr * velocity[j];
            }
            off += p.len();
        });
        self.steps += 1;
        Ok(())
    }
}

/// Bias-corrected Adam with L2 regularisation added to the gradient.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub cfg: AdamConfig,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        })
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    pub fn step<P: ParamSet<T>>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        check_len(params, grads)?;
        let n = params.param_count();
        if self.m.len() != n {
            self.m = vec![T::zero(); n];
            self.v = vec![T::zero(); n];
        }
        self.t += 1;
        let c = &self.cfg;
        let (b1, b2) = (T::c(c.beta1), T::c(c.beta2));
        let (one_b1, one_b2) = (T::c(1.0 - c.beta1), T::c(1.0 - c.beta2));
        let bc1 = T::c(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = T::c(1.0 - c.beta2.powi(self.t as i32));
        let (lr, eps, wd) = (T::c(c.lr), T::c(c.eps), T::c(c.weight_decay));
        let flat = grads.flatten();
        let (m, v) = (&mut self.m, &mut self.v);
        let mut off = 0;
        params.visit_mut(&mut |_, p| {
            for (i, theta) in p.iter_mut().enumerate() {
                let j = off + i;
                let g = flat[j] + wd * *theta;
                m[j] = b1 * m[j] + one_b1 * g;
                v[j] = b2 * v[j] + one_b2 * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            off += p.len();
        });
        Ok(())
    }
}
