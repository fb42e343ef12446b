//! Parameter construction and the small dense building blocks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::numeric::rng::standard_normal;
use crate::numeric::{Array, Graph, NodeId, ParamId, ParamStore};

#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    Ones,
    /// `U(−1/√fan_in, 1/√fan_in)`.
    FanIn(usize),
    /// `N(0, σ²)`.
    Normal(f64),
}

/// Creates parameters from an RNG, or binds to existing ones by name when
/// constructed with [`ParamBuilder::bind`].
pub struct ParamBuilder<'a> {
    store: &'a mut ParamStore,
    rng: Option<ChaCha8Rng>,
}

impl<'a> ParamBuilder<'a> {
    pub fn create(store: &'a mut ParamStore, rng: ChaCha8Rng) -> Self {
        Self { store, rng: Some(rng) }
    }

    pub fn bind(store: &'a mut ParamStore) -> Self {
        Self { store, rng: None }
    }

    pub fn param(&mut self, name: &str, shape: &[usize], init: Init) -> Result<ParamId> {
        match &mut self.rng {
            Some(rng) => {
                let n: usize = shape.iter().product();
                let data: Vec<f64> = match init {
                    Init::Zeros => vec![0.0; n],
                    Init::Ones => vec![1.0; n],
                    Init::FanIn(fan) => {
                        let a = 1.0 / (fan.max(1) as f64).sqrt();
                        (0..n).map(|_| rng.random_range(-a..a)).collect()
                    }
                    Init::Normal(s) => (0..n).map(|_| s * standard_normal(rng)).collect(),
                };
                self.store.add(name, Array::new(shape.to_vec(), data)?)
            }
            None => {
                let id = self
                    .store
                    .id(name)
                    .ok_or_else(|| invalid(format!("missing parameter {name:?}")))?;
                if self.store.value(id).shape() != shape {
                    return Err(invalid(format!(
                        "parameter {name:?} has shape {:?}, expected {shape:?}",
                        self.store.value(id).shape()
                    )));
                }
                Ok(id)
            }
        }
    }

    pub fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<Linear> {
        Ok(Linear {
            w: self.param(&format!("{name}.w"), &[fan_in, fan_out], Init::FanIn(fan_in))?,
            b: self.param(&format!("{name}.b"), &[fan_out], Init::Zeros)?,
        })
    }

    pub fn norm(&mut self, name: &str, d: usize) -> Result<Norm> {
        Ok(Norm {
            gain: self.param(&format!("{name}.g"), &[d], Init::Ones)?,
            bias: self.param(&format!("{name}.b"), &[d], Init::Zeros)?,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let w = g.param(store, self.w)?;
        let b = g.param(store, self.b)?;
        let y = g.matmul(x, w)?;
        g.add_bias(y, b)
    }
}

pub const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub struct Norm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl Norm {
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let gain = g.param(store, self.gain)?;
        let bias = g.param(store, self.bias)?;
        g.layer_norm(x, gain, bias, LN_EPS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    #[test]
    fn create_then_bind() {
        let mut store = ParamStore::new();
        let lin = ParamBuilder::create(&mut store, RngStream::new(1).rng())
            .linear("fc", 4, 3)
            .unwrap();
        let w = store.value(lin.w);
        assert!(w.data().iter().all(|v| v.abs() <= 0.5));
        assert!(store.value(lin.b).data().iter().all(|v| *v == 0.0));
        let again = ParamBuilder::bind(&mut store).linear("fc", 4, 3).unwrap();
        assert_eq!(again.w, lin.w);
        assert!(ParamBuilder::bind(&mut store).linear("fc", 3, 3).is_err());
        assert!(ParamBuilder::bind(&mut store).linear("other", 4, 3).is_err());
    }
}
