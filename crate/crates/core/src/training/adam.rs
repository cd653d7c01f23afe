use std::collections::BTreeMap;

use crate::numeric::{ParamVisitor, Tensor};

/// First-order adaptive-moment optimizer with bias correction.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: usize,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    /// Apply one update. Parameters without a gradient entry are skipped.
    pub fn step(&mut self, params: &mut dyn ParamVisitor, grads: &BTreeMap<String, Tensor>) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let (m_map, v_map) = (&mut self.m, &mut self.v);
        params.visit_mut(&mut |name, tensor| {
            let Some(g) = grads.get(name) else { return };
            let m = m_map
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(tensor.shape()));
            let v = v_map
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(tensor.shape()));
            *m = m.scale(b1).add(&g.scale(1.0 - b1)).expect("shape fixed");
            *v = v
                .scale(b2)
                .add(&g.mul(g).expect("same shape").scale(1.0 - b2))
                .expect("shape fixed");
            let update: Vec<f64> = m
                .data()
                .iter()
                .zip(v.data().iter())
                .map(|(&mi, &vi)| {
                    let mhat = mi / bc1;
                    let vhat = vi / bc2;
                    lr * mhat / (vhat.sqrt() + eps)
                })
                .collect();
            let update = Tensor::new(tensor.shape().to_vec(), update).expect("shape fixed");
            *tensor = tensor.sub(&update).expect("same shape");
        });
    }
}

/// Scale all gradients so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm(grads: &mut BTreeMap<String, Tensor>, max_norm: f64) -> f64 {
    let total: f64 = grads
        .values()
        .map(|g| g.data().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if total > max_norm && total > 0.0 {
        let scale = max_norm / total;
        for g in grads.values_mut() {
            *g = g.scale(scale);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use crate::numeric::{ModelConfig, PredictorParams};

    use super::*;

    #[test]
    fn adam_descends_a_quadratic() {
        let cfg = ModelConfig {
            vocab_size: 4,
            dim: 4,
            heads: 2,
            layers: 1,
            seq_len: 4,
            timesteps: 4,
            ffn_mult: 1,
            dropout: 0.0,
        };
        // reuse a parameter struct as a generic bag of tensors
        let mut params = PredictorParams::init(&cfg, 0, 1, false, 4);
        let mut adam = Adam::new(0.05);
        let objective = |p: &PredictorParams| p.head_w.data().iter().map(|v| v * v).sum::<f64>();
        let before = objective(&params);
        for _ in 0..50 {
            let mut grads = BTreeMap::new();
            grads.insert("head_w".to_string(), params.head_w.scale(2.0));
            adam.step(&mut params, &grads);
        }
        assert!(objective(&params) < before * 0.1);
    }

    #[test]
    fn clipping_caps_the_global_norm() {
        let mut grads = BTreeMap::new();
        grads.insert("a".to_string(), Tensor::full(&[4], 10.0));
        grads.insert("b".to_string(), Tensor::full(&[4], -10.0));
        let before = clip_global_norm(&mut grads, 1.0);
        assert!(before > 1.0);
        let after: f64 = grads
            .values()
            .map(|g| g.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        assert!((after - 1.0).abs() < 1e-12);
    }
}
