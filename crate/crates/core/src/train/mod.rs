//! Learning-rate schedule, Adam/AdamW and the training loops.

pub mod fit;
pub mod optim;
pub mod schedule;
pub mod tasks;

pub use fit::{fit, metrics_csv, EpochLog, Task, TrainConfig, TrainOutcome, Validation};
pub use optim::{clip_grad_norm, grad_norm, Adam, OptimizerKind};
pub use schedule::{lr_at, LrSchedule};
pub use tasks::{
    evaluate_event, event_samples, finetune_event, finetune_forecaster, forecast_windows, split_clips, train_event,
    train_forecaster,
};
