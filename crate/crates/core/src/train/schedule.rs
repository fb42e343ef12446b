use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    /// Linear warm-up from 0, then cosine decay to 0.
    #[default]
    WarmupCosine,
    Constant,
}

/// Learning rate for update `step` of `total`.
pub fn lr_at(step: usize, total: usize, lr_peak: f64, warmup_ratio: f64, schedule: LrSchedule) -> f64 {
    if schedule == LrSchedule::Constant {
        return lr_peak;
    }
    if total == 0 {
        return 0.0;
    }
    let step = step.min(total) as f64;
    let total = total as f64;
    let warmup = warmup_ratio * total;
    if step < warmup {
        return lr_peak * step / warmup;
    }
    let span = total - warmup;
    if span <= 0.0 {
        return lr_peak;
    }
    let progress = (step - warmup) / span;
    lr_peak * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}
