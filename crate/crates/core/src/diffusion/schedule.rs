use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::rng::{normal_vec, standard_normal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

/// Reverse-process update rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Stochastic update with `σ_s² = β_s`.
    #[default]
    Ancestral,
    /// Deterministic implicit update.
    Ddim,
}

/// Linear variance schedule over steps `1..=S`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSchedule {
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn new(cfg: &ScheduleConfig) -> Result<Self> {
        make_schedule(cfg.steps, cfg.beta_start, cfg.beta_end)
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, s: usize) -> f64 {
        self.beta[s - 1]
    }

    /// `ᾱ_s`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, s: usize) -> f64 {
        if s == 0 {
            1.0
        } else {
            self.alpha_bar[s - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    fn check_step(&self, s: usize) -> Result<()> {
        if s == 0 || s > self.steps() {
            return Err(invalid(format!("diffusion step {s} outside 1..={}", self.steps())));
        }
        Ok(())
    }
}

pub fn make_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<DiffusionSchedule> {
    if steps == 0 {
        return Err(invalid("schedule needs at least one step"));
    }
    if !(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0) {
        return Err(invalid(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start} and {beta_end}"
        )));
    }
    let beta: Vec<f64> = if steps == 1 {
        vec![beta_start]
    } else {
        (0..steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut alpha_bar = Vec::with_capacity(steps);
    let mut acc = 1.0;
    for b in &beta {
        acc *= 1.0 - b;
        alpha_bar.push(acc);
    }
    Ok(DiffusionSchedule { beta, alpha_bar })
}

/// `x_s = √ᾱ_s·x_f + √(1−ᾱ_s)·ε` for a given `ε`.
pub fn noise_with(x_f: &[f64], eps: &[f64], s: usize, sched: &DiffusionSchedule) -> Result<Vec<f64>> {
    sched.check_step(s)?;
    if x_f.len() != eps.len() {
        return Err(invalid("x_f and epsilon lengths differ"));
    }
    let (a, b) = (sched.alpha_bar(s).sqrt(), (1.0 - sched.alpha_bar(s)).sqrt());
    Ok(x_f.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// Draws `ε ~ N(0, I)` and returns `(x_s, ε)`.
pub fn forward_noise<R: Rng + ?Sized>(
    x_f: &[f64],
    s: usize,
    sched: &DiffusionSchedule,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    sched.check_step(s)?;
    let eps = normal_vec(rng, x_f.len());
    Ok((noise_with(x_f, &eps, s, sched)?, eps))
}

/// One reverse step from `x_s` to `x_{s−1}`. The ancestral sampler draws
/// fresh noise except at `s = 1`.
pub fn denoise_step<R: Rng + ?Sized>(
    x_s: &[f64],
    eps_hat: &[f64],
    s: usize,
    sched: &DiffusionSchedule,
    sampler: Sampler,
    rng: &mut R,
) -> Result<Vec<f64>> {
    sched.check_step(s)?;
    if x_s.len() != eps_hat.len() {
        return Err(invalid("x_s and eps_hat lengths differ"));
    }
    let ab = sched.alpha_bar(s);
    Ok(match sampler {
        Sampler::Ancestral => {
            let beta = sched.beta(s);
            let c = beta / (1.0 - ab).sqrt();
            let inv = 1.0 / (1.0 - beta).sqrt();
            let sigma = beta.sqrt();
            x_s.iter()
                .zip(eps_hat)
                .map(|(x, e)| {
                    let z = if s > 1 { standard_normal(rng) } else { 0.0 };
                    (x - c * e) * inv + sigma * z
                })
                .collect()
        }
        Sampler::Ddim => {
            let ab_prev = sched.alpha_bar(s - 1);
            x_s.iter()
                .zip(eps_hat)
                .map(|(x, e)| {
                    let x0 = (x - (1.0 - ab).sqrt() * e) / ab.sqrt();
                    ab_prev.sqrt() * x0 + (1.0 - ab_prev).sqrt() * e
                })
                .collect()
        }
    })
}
