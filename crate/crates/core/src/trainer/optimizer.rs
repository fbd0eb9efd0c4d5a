use crate::bihm::{BihmModel, GradientSet};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moment estimates, shaped like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub step: u64,
    pub m: BihmModel,
    pub v: BihmModel,
}

impl Adam {
    pub fn new(model: &BihmModel) -> Self {
        Self {
            step: 0,
            m: model.zeros_like(),
            v: model.zeros_like(),
        }
    }

    /// One descent step on `grad` with bias-corrected moments.
    pub fn update(&mut self, model: &mut BihmModel, grad: &GradientSet, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step as i32);
        let c2 = 1.0 - BETA2.powi(self.step as i32);
        let step = lr / c1;
        for (((p, g), m), v) in model
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for (((p, &g), m), v) in p
                .data
                .iter_mut()
                .zip(g.data)
                .zip(m.data.iter_mut())
                .zip(v.data.iter_mut())
            {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= step * *m / ((*v / c2).sqrt() + EPSILON);
            }
        }
    }
}

/// Soft-thresholds every weight matrix entry by `amount`; biases and prior logits are untouched.
pub fn shrink_weights(model: &mut BihmModel, amount: f64) {
    if amount == 0.0 {
        return;
    }
    for t in model.tensors_mut().into_iter().filter(|t| t.is_weight_matrix) {
        for w in t.data.iter_mut() {
            *w = w.signum() * (w.abs() - amount).max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn first_step_moves_by_lr() {
        let mut m = BihmModel::zeros(&[2, 1]).unwrap();
        let mut g = m.zeros_like();
        g.generative[0].weights[[0, 0]] = 3.0;
        g.prior.logits[0] = -0.2;
        let mut opt = Adam::new(&m);
        opt.update(&mut m, &g, 0.01);
        assert!((m.generative[0].weights[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((m.prior.logits[0] - 0.01).abs() < 1e-9);
        assert_eq!(m.generative[0].weights[[1, 0]], 0.0);
    }

    #[test]
    fn zero_rate_keeps_model_bit_identical() {
        let mut m = BihmModel::random(&[4, 3, 2], 1.0, &mut RngState::new(1)).unwrap();
        let before = m.clone();
        let g = BihmModel::random(&[4, 3, 2], 1.0, &mut RngState::new(2)).unwrap();
        let mut opt = Adam::new(&m);
        opt.update(&mut m, &g, 0.0);
        shrink_weights(&mut m, 0.0);
        assert_eq!(m, before);
    }

    #[test]
    fn shrinkage_spares_biases() {
        let mut m = BihmModel::random(&[4, 3], 1.0, &mut RngState::new(3)).unwrap();
        let before = m.clone();
        let amount = 0.001 * 1e-3;
        shrink_weights(&mut m, amount);
        for (a, b) in m.tensors().iter().zip(before.tensors()) {
            for (x, y) in a.data.iter().zip(b.data) {
                if a.is_weight_matrix {
                    assert!(((y.abs() - x.abs()) - amount).abs() < 1e-15);
                } else {
                    assert_eq!(x, y);
                }
            }
        }
        let mut z = BihmModel::zeros(&[2, 1]).unwrap();
        z.generative[0].weights[[0, 0]] = 0.5e-6;
        shrink_weights(&mut z, 1e-6);
        assert_eq!(z.generative[0].weights[[0, 0]], 0.0);
    }
}
