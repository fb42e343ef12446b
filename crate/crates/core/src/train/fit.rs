use std::fmt::Write;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{clip_grad_norm, Adam, OptimizerKind};
use super::schedule::{lr_at, LrSchedule};
use crate::error::{invalid, Result};
use crate::numeric::{Graph, NodeId, ParamStore, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Forecast,
    Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub lr_peak: f64,
    pub weight_decay: f64,
    pub warmup_ratio: f64,
    #[serde(default)]
    pub schedule: LrSchedule,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_clip: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Per-axis flip probability (event task only).
    #[serde(default)]
    pub flip_prob: f64,
}

impl TrainConfig {
    /// Diffusion forecaster at full scale.
    pub fn forecast() -> Self {
        Self {
            task: Task::Forecast,
            lr_peak: 1e-3,
            weight_decay: 1e-4,
            warmup_ratio: 0.02,
            schedule: LrSchedule::WarmupCosine,
            epochs: 60,
            batch_size: 200,
            grad_clip: 1.0,
            early_stop_patience: 35,
            seed: 0,
            flip_prob: 0.0,
        }
    }

    /// Event classifier at full scale.
    pub fn event() -> Self {
        Self {
            task: Task::Event,
            lr_peak: 5e-4,
            weight_decay: 1e-4,
            warmup_ratio: 0.0,
            schedule: LrSchedule::Constant,
            epochs: 200,
            batch_size: 32,
            grad_clip: 1.0,
            early_stop_patience: 35,
            seed: 0,
            flip_prob: 0.5,
        }
    }

    /// Same task, batch 16.
    pub fn desk(mut self) -> Self {
        self.batch_size = 16;
        self
    }

    /// Learning rate used when continuing from a base checkpoint.
    pub fn finetuning(mut self) -> Self {
        self.lr_peak = 1e-4;
        self
    }

    pub fn optimizer(&self) -> OptimizerKind {
        match self.task {
            Task::Forecast => OptimizerKind::AdamW,
            Task::Event => OptimizerKind::Adam,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return Err(invalid(format!("warmup_ratio {} outside [0, 1)", self.warmup_ratio)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        if !(self.lr_peak >= 0.0 && self.weight_decay >= 0.0 && self.grad_clip > 0.0) {
            return Err(invalid("lr_peak and weight_decay must be >= 0, grad_clip > 0"));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(invalid("flip_prob must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Validation result. Larger `score` is better; ties go to smaller `loss`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub score: f64,
    pub loss: f64,
}

impl Validation {
    pub fn from_loss(loss: f64) -> Self {
        Self { score: -loss, loss }
    }

    pub fn better_than(&self, other: &Validation) -> bool {
        self.score > other.score || (self.score == other.score && self.loss < other.loss)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation loss (forecast) or top-1 type accuracy (event).
    pub valid_metric: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub log: Vec<EpochLog>,
    /// Epoch (1-based) whose parameters were kept; 0 when none ran.
    pub best_epoch: usize,
    pub best: Option<Validation>,
    pub stopped_early: bool,
    pub steps: usize,
}

pub fn metrics_csv(log: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_loss,valid_metric,lr\n");
    for e in log {
        writeln!(s, "{},{:.10},{:.10},{:.10e}", e.epoch, e.train_loss, e.valid_metric, e.lr).unwrap();
    }
    s
}

/// Epoch loop shared by both tasks.
///
/// `batch_loss` builds the loss for a batch of training indices; `validate`
/// scores the current parameters. The best parameters are written back to
/// `store` on return.
pub fn fit<F, V>(
    store: &mut ParamStore,
    n_train: usize,
    cfg: &TrainConfig,
    mut batch_loss: F,
    mut validate: V,
) -> Result<TrainOutcome>
where
    F: FnMut(&ParamStore, &[usize], &mut ChaCha8Rng) -> Result<(Graph, NodeId)>,
    V: FnMut(&ParamStore) -> Result<Validation>,
{
    cfg.validate()?;
    if n_train == 0 {
        return Err(invalid("empty training split"));
    }
    let root = RngStream::new(cfg.seed);
    let mut noise = root.fork("noise").rng();
    let per_epoch = n_train.div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let mut opt = Adam::new(cfg.optimizer(), cfg.weight_decay, store);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut log = Vec::new();
    let mut best: Option<(Validation, ParamStore, usize)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut step = 0;

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut root.fork("shuffle").child(epoch as u64).rng());
        let mut sum = 0.0;
        let mut lr = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (g, loss) = batch_loss(store, batch, &mut noise)?;
            sum += g.value(loss).item() * batch.len() as f64;
            store.zero_grad();
            g.backward(loss, store)?;
            clip_grad_norm(store, cfg.grad_clip);
            lr = lr_at(step, total, cfg.lr_peak, cfg.warmup_ratio, cfg.schedule);
            opt.step(store, lr);
            step += 1;
        }
        let v = validate(store)?;
        log.push(EpochLog {
            epoch,
            train_loss: sum / n_train as f64,
            valid_metric: match cfg.task {
                Task::Forecast => v.loss,
                Task::Event => v.score,
            },
            lr,
        });
        if best.as_ref().is_none_or(|(b, _, _)| v.better_than(b)) {
            best = Some((v, store.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.early_stop_patience {
                stopped_early = true;
                break;
            }
        }
    }
    store.zero_grad();
    let (best_v, best_epoch) = match best {
        Some((v, params, epoch)) => {
            *store = params;
            store.zero_grad();
            (Some(v), epoch)
        }
        None => (None, 0),
    };
    Ok(TrainOutcome {
        log,
        best_epoch,
        best: best_v,
        stopped_early,
        steps: step,
    })
}
