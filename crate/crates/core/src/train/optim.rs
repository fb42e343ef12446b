use serde::{Deserialize, Serialize};

use crate::numeric::ParamStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Weight decay added to the gradient before the moment update.
    Adam,
    /// Weight decay applied directly to the parameters.
    AdamW,
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// Global L2 norm of all gradients.
pub fn grad_norm(store: &ParamStore) -> f64 {
    store
        .iter()
        .flat_map(|p| p.gradient.data().iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Rescales all gradients so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(store: &mut ParamStore, max_norm: f64) -> f64 {
    let norm = grad_norm(store);
    if norm > max_norm && norm > 0.0 {
        let c = max_norm / norm;
        for p in store.iter_mut() {
            p.gradient = p.gradient.map(|g| g * c);
        }
    }
    norm
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub kind: OptimizerKind,
    pub weight_decay: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(kind: OptimizerKind, weight_decay: f64, store: &ParamStore) -> Self {
        let zeros = || store.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Self {
            kind,
            weight_decay,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update from the gradients currently stored.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let mut out = p.value.to_vec();
            for (i, x) in out.iter_mut().enumerate() {
                let mut g = p.gradient.data()[i];
                if self.kind == OptimizerKind::Adam {
                    g += self.weight_decay * *x;
                }
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
                let update = (m[i] / bc1) / ((v[i] / bc2).sqrt() + EPS);
                if self.kind == OptimizerKind::AdamW {
                    *x -= lr * self.weight_decay * *x;
                }
                *x -= lr * update;
            }
            p.value = p.value.with_data(out).expect("same length");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Array;

    fn store(values: &[f64], grads: &[f64]) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("p", Array::vector(values.to_vec())).unwrap();
        s.iter_mut().next().unwrap().gradient = Array::vector(grads.to_vec());
        s
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        for kind in [OptimizerKind::Adam, OptimizerKind::AdamW] {
            let mut s = store(&[1.0, -2.0], &[0.0, 0.0]);
            let before = s.clone();
            let mut opt = Adam::new(kind, 0.0, &s);
            opt.step(&mut s, 1e-2);
            assert_eq!(s, before);
        }
    }

    #[test]
    fn clipping_scales_to_max_norm() {
        let mut s = store(&[0.0, 0.0], &[6.0, 8.0]);
        assert_eq!(clip_grad_norm(&mut s, 1.0), 10.0);
        let g = s.iter().next().unwrap().gradient.to_vec();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut s = store(&[0.0], &[0.5]);
        clip_grad_norm(&mut s, 1.0);
        assert_eq!(s.iter().next().unwrap().gradient.to_vec(), vec![0.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = store(&[1.0], &[3.0]);
        let mut opt = Adam::new(OptimizerKind::Adam, 0.0, &s);
        opt.step(&mut s, 0.1);
        let v = s.iter().next().unwrap().value.data()[0];
        assert!((v - (1.0 - 0.1 * 3.0 / (3.0 + EPS))).abs() < 1e-15);
    }

    #[test]
    fn decay_conventions_differ() {
        let mut a = store(&[2.0], &[0.0]);
        let mut w = a.clone();
        Adam::new(OptimizerKind::Adam, 0.1, &a).step(&mut a, 0.01);
        Adam::new(OptimizerKind::AdamW, 0.1, &w).step(&mut w, 0.01);
        let av = a.iter().next().unwrap().value.data()[0];
        let wv = w.iter().next().unwrap().value.data()[0];
        // Coupled decay is normalized away by Adam on the first step.
        assert!((av - (2.0 - 0.01 * 0.2 / (0.2 + EPS))).abs() < 1e-12);
        assert!((wv - 2.0 * (1.0 - 0.001)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_converges() {
        let mut s = store(&[1.0], &[0.0]);
        let mut opt = Adam::new(OptimizerKind::Adam, 0.0, &s);
        for step in 0..500 {
            let p = s.iter().next().unwrap().value.data()[0];
            s.iter_mut().next().unwrap().gradient = Array::vector(vec![2.0 * p]);
            clip_grad_norm(&mut s, 1.0);
            let lr = super::super::schedule::lr_at(step, 500, 0.05, 0.0, Default::default());
            opt.step(&mut s, lr);
        }
        assert!(s.iter().next().unwrap().value.data()[0].abs() < 1e-3);
    }
}
