use std::collections::BTreeMap;

use crate::autograd::ParamStore;
use crate::error::{Error, Result};
use crate::pipeline::config::OptimizerConfig;
use crate::tensor::Tensor;

/// Cosine annealing from `base` to `base · floor_ratio` over `total` epochs.
pub fn cosine_lr(base: f64, floor_ratio: f64, epoch: usize, total: usize) -> f64 {
    let floor = base * floor_ratio;
    let t = if total == 0 { 0.0 } else { epoch as f64 / total as f64 };
    floor + (base - floor) * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
}

/// Adam with decoupled weight decay: `p ← p·(1 − lr·wd)`, then the Adam step.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub cfg: OptimizerConfig,
    pub step: u64,
    pub m: BTreeMap<String, Tensor>,
    pub v: BTreeMap<String, Tensor>,
}

impl AdamW {
    pub fn new(cfg: OptimizerConfig, params: &ParamStore) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(t.dim())))
                .collect::<BTreeMap<_, _>>()
        };
        AdamW {
            cfg,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn update(&mut self, params: &mut ParamStore, grads: &BTreeMap<String, Tensor>, lr: f64) -> Result<()> {
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let decay = 1.0 - lr * c.weight_decay;
        for (name, p) in params.iter_mut() {
            let g = grads
                .get(name)
                .ok_or_else(|| Error::Shape(format!("no gradient for parameter {name}")))?;
            let m = self.m.get_mut(name).expect("moment tensors mirror the parameters");
            let v = self.v.get_mut(name).expect("moment tensors mirror the parameters");
            ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p = *p * decay - lr * mhat / (vhat.sqrt() + c.eps);
            });
        }
        Ok(())
    }
}
