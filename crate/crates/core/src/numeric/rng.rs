//! Splittable, counter-based random streams.
//!
//! A stream is identified by a 64-bit key. Children are derived by mixing
//! the parent key with a label or an index, so independent consumers (the
//! K rollouts, per-epoch shuffles, per-sample noise) never share state and
//! can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    key: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix(seed) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream selected by a label.
    pub fn fork(&self, label: &str) -> Self {
        // FNV-1a over the label, then mixed with the parent key.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        Self {
            key: splitmix(self.key ^ splitmix(h)),
        }
    }

    /// Child stream selected by an index.
    pub fn child(&self, index: u64) -> Self {
        Self {
            key: splitmix(self.key.wrapping_add(splitmix(index ^ 0xA5A5_5A5A_0F0F_F0F0))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut z = self.key;
        for chunk in seed.chunks_mut(8) {
            z = splitmix(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_stream() {
        let a: Vec<u64> = RngStream::new(7).rng().random_iter().take(4).collect();
        let b: Vec<u64> = RngStream::new(7).rng().random_iter().take(4).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn children_are_distinct() {
        let root = RngStream::new(1);
        assert_ne!(root.child(0), root.child(1));
        assert_ne!(root.fork("a"), root.fork("b"));
        assert_ne!(root.fork("a"), root);
        let x: f64 = root.child(0).rng().random();
        let y: f64 = root.child(1).rng().random();
        assert_ne!(x, y);
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::new(3).rng();
        let v = normal_vec(&mut rng, 20_000);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }
}
