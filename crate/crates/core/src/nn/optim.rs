use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exposes a model's trainable tensors as flat slices in a fixed order.
///
/// Gradients are represented by any value whose tensors line up with the
/// parameters one-to-one, usually a zeroed clone of the model itself.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Adds `scale * other` tensor-wise.
    fn accumulate(&mut self, other: &impl Parameters, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            assert_eq!(dst.len(), src.len(), "gradient shapes differ");
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

impl<A: Parameters, B: Parameters> Parameters for (A, B) {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.0.tensors();
        t.extend(self.1.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.0.tensors_mut();
        t.extend(self.1.tensors_mut());
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 200, seed: 0, optimizer: OptimizerKind::Adam, weight_decay: 5e-4 }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted so a run can be made a no-op.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be finite and >= 0", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!("weight decay {} must be finite and >= 0", self.weight_decay)));
        }
        Ok(())
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Optimizer moments; created empty and sized on the first step.
#[derive(Debug, Clone, Default)]
pub struct OptimizerState {
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

/// Applies one update of `config.optimizer` to `params` in place.
///
/// Weight decay is added to the gradient (L2 regularisation).
pub fn grad_step<P, G>(params: &mut P, grads: &G, config: &TrainConfig, state: &mut OptimizerState) -> Result<()>
where
    P: Parameters + ?Sized,
    G: Parameters + ?Sized,
{
    let grad_tensors = grads.tensors();
    let mut param_tensors = params.tensors_mut();
    if grad_tensors.len() != param_tensors.len()
        || grad_tensors.iter().zip(&param_tensors).any(|(g, p)| g.len() != p.len())
    {
        return Err(Error::ShapeMismatch("gradients do not match parameter shapes".into()));
    }
    state.step += 1;
    let lr = config.learning_rate;
    let wd = config.weight_decay;
    match config.optimizer {
        OptimizerKind::Sgd => {
            for (p, g) in param_tensors.iter_mut().zip(&grad_tensors) {
                for (pv, &gv) in p.iter_mut().zip(g.iter()) {
                    *pv -= lr * (gv + wd * *pv);
                }
            }
        }
        OptimizerKind::Adam => {
            if state.first_moment.is_empty() {
                state.first_moment = grad_tensors.iter().map(|g| vec![0.0; g.len()]).collect();
                state.second_moment = state.first_moment.clone();
            }
            let t = state.step as i32;
            let bc1 = 1.0 - ADAM_BETA1.powi(t);
            let bc2 = 1.0 - ADAM_BETA2.powi(t);
            for (k, (p, g)) in param_tensors.iter_mut().zip(&grad_tensors).enumerate() {
                let m = &mut state.first_moment[k];
                let v = &mut state.second_moment[k];
                for i in 0..p.len() {
                    let gv = g[i] + wd * p[i];
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gv;
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gv * gv;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                }
            }
        }
    }
    Ok(())
}
