use super::schedule::DiffusionSchedule;
use crate::backbone::TokenGrid;
use crate::error::{invalid, Result};

/// Anything that predicts the noise at the noise-target slots of a batch of
/// token grids, one diffusion step per grid.
pub trait Denoiser {
    /// One flat `[x, y, ...]` vector per grid, ordered like
    /// [`TokenGrid::noise_values`].
    fn predict(&mut self, grids: &[TokenGrid], steps: &[usize]) -> Result<Vec<Vec<f64>>>;
}

/// Predicts zero noise everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroDenoiser;

impl Denoiser for ZeroDenoiser {
    fn predict(&mut self, grids: &[TokenGrid], _steps: &[usize]) -> Result<Vec<Vec<f64>>> {
        Ok(grids.iter().map(|g| vec![0.0; 2 * g.noise_count()]).collect())
    }
}

/// Returns the exact noise relative to known clean targets, one per grid.
#[derive(Clone, Debug)]
pub struct OracleDenoiser {
    pub schedule: DiffusionSchedule,
    pub targets: Vec<Vec<f64>>,
}

impl Denoiser for OracleDenoiser {
    fn predict(&mut self, grids: &[TokenGrid], steps: &[usize]) -> Result<Vec<Vec<f64>>> {
        if grids.len() != self.targets.len() {
            return Err(invalid("oracle needs one target per grid"));
        }
        Ok(grids
            .iter()
            .zip(&self.targets)
            .zip(steps)
            .map(|((g, x_f), &s)| {
                let ab = self.schedule.alpha_bar(s);
                g.noise_values()
                    .iter()
                    .zip(x_f)
                    .map(|(x, f)| (x - ab.sqrt() * f) / (1.0 - ab).sqrt())
                    .collect()
            })
            .collect())
    }
}

/// Wraps a denoiser and counts invocations.
#[derive(Clone, Debug, Default)]
pub struct Counting<D> {
    pub inner: D,
    /// Batched calls.
    pub calls: usize,
    /// Individual grid evaluations.
    pub evaluations: usize,
}

impl<D> Counting<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            calls: 0,
            evaluations: 0,
        }
    }
}

impl<D: Denoiser> Denoiser for Counting<D> {
    fn predict(&mut self, grids: &[TokenGrid], steps: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.calls += 1;
        self.evaluations += grids.len();
        self.inner.predict(grids, steps)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for &mut D {
    fn predict(&mut self, grids: &[TokenGrid], steps: &[usize]) -> Result<Vec<Vec<f64>>> {
        (**self).predict(grids, steps)
    }
}
