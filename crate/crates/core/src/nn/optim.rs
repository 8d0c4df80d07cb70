// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

use super::model::Param;
use super::tensor::Real;
use super::train::TrainConfig;

/// Adam with bias correction and decoupled weight decay.
///
/// Each step first shrinks decaying parameters by `lr * weight_decay * p`,
/// then applies `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    steps: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(params: &[Param<T>]) -> Self {
        Self {
            m: params.iter().map(|p| vec![T::zero(); p.value.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.value.len()]).collect(),
            steps: 0,
        }
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [Param<T>], grads: &[Vec<T>], cfg: &TrainConfig) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::InvalidInput(format!(
                "{} gradients for {} parameters (optimizer tracks {})",
                grads.len(),
                params.len(),
                self.m.len()
            )));
        }
        self.steps += 1;
        let t = self.steps as i32;
        let lr = T::of(cfg.learning_rate);
        let decay = T::of(cfg.learning_rate * cfg.weight_decay);
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::of(1.0 - cfg.beta1.powi(t));
        let c2 = T::of(1.0 - cfg.beta2.powi(t));
        let eps = T::of(cfg.eps);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if g.len() != p.value.len() {
                return Err(Error::InvalidInput(format!(
                    "gradient length mismatch for {}",
                    p.name
                )));
            }
            let decays = p.kind.decays() && cfg.weight_decay != 0.0;
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((w, &gr), mi), vi) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(g)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                if decays {
                    *w -= decay * *w;
                }
                *mi = b1 * *mi + (T::one() - b1) * gr;
                *vi = b2 * *vi + (T::one() - b2) * gr * gr;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
