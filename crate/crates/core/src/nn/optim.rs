use super::model::{CnnModel, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub lr: f64,
    /// Iteration-based decay: lr_t = lr / (1 + decay * t).
    pub decay: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            decay: 1e-6,
            rho: 0.9,
            epsilon: 1e-7,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must be in [0, 1), got {}", self.rho)));
        }
        if !(self.decay >= 0.0 && self.epsilon >= 0.0) {
            return Err(Error::Config("decay and epsilon must be non-negative".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, t: u64) -> f64 {
        self.lr / (1.0 + self.decay * t as f64)
    }
}

/// One RMSProp update of a parameter buffer at iteration `t`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], acc: &mut [f64], cfg: &RmsPropConfig, t: u64) {
    let lr = cfg.lr_at(t);
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
        *a = cfg.rho * *a + (1.0 - cfg.rho) * g * g;
        *p -= lr * g / (a.sqrt() + cfg.epsilon);
    }
}

/// Optimizer state: accumulators per parameter tensor plus the iteration
/// counter driving the learning-rate decay.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    pub iterations: u64,
    pub accumulators: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(model: &CnnModel, config: RmsPropConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            iterations: 0,
            accumulators: model.params().iter().map(|t| vec![0.0; t.len()]).collect(),
        })
    }

    pub fn step(&mut self, model: &mut CnnModel, grads: &Gradients) -> Result<()> {
        if grads.tensors.len() != self.accumulators.len() {
            return Err(Error::Shape("gradient/accumulator count mismatch".into()));
        }
        let t = self.iterations;
        for ((p, g), acc) in model.params_mut().iter_mut().zip(&grads.tensors).zip(&mut self.accumulators) {
            if p.len() != g.len() || g.len() != acc.len() {
                return Err(Error::Shape("gradient/parameter size mismatch".into()));
            }
            rmsprop_step(p.data_mut(), g, acc, &self.config, t);
        }
        self.iterations += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_value() {
        let cfg = RmsPropConfig::default();
        let mut p = [0.0];
        let mut acc = [0.0];
        rmsprop_step(&mut p, &[1.0], &mut acc, &cfg, 0);
        let want = -1e-4 / (0.1f64.sqrt() + 1e-7);
        assert!((p[0] - want).abs() < 1e-15);
        assert!((p[0] + 3.1623e-4).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let cfg = RmsPropConfig::default();
        let mut p = [1.5, -2.0];
        let mut acc = [0.3, 0.0];
        rmsprop_step(&mut p, &[0.0, 0.0], &mut acc, &cfg, 17);
        assert_eq!(p, [1.5, -2.0]);
    }

    #[test]
    fn decay_halves_at_one_million() {
        let cfg = RmsPropConfig::default();
        assert!((cfg.lr_at(1_000_000) - cfg.lr / 2.0).abs() < 1e-18);
    }

    #[test]
    fn invalid_configs() {
        assert!(RmsPropConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(RmsPropConfig { rho: 1.0, ..Default::default() }.validate().is_err());
    }
}
