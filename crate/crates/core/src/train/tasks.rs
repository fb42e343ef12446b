use rand::seq::SliceRandom;

use super::fit::{fit, Task, TrainConfig, TrainOutcome, Validation};
use crate::backbone::{GridBatch, TokenGrid};
use crate::data::{flip_augment, window_starts, Segment, TrajectoryClip};
use crate::diffusion::{diffusion_loss, held_out_loss, ForecastSample, Forecaster};
use crate::error::{invalid, Result};
use crate::event::{event_loss, hierarchical_loss, EventClassifier, EventLabel, EventNet, EventSample};
use crate::numeric::{Graph, ParamStore, RngStream};

/// Clip indices split into (train, valid); `valid_fraction` of the clips,
/// rounded up, go to validation.
pub fn split_clips(n: usize, valid_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut RngStream::new(seed).fork("split").rng());
    let n_valid = ((n as f64 * valid_fraction).ceil() as usize).min(n);
    let mut valid = idx.split_off(n - n_valid);
    idx.sort_unstable();
    valid.sort_unstable();
    (idx, valid)
}

/// Normalized `(history, window)` training samples from every clip.
pub fn forecast_windows(
    clips: &[&TrajectoryClip],
    history: usize,
    window: usize,
    stride: usize,
) -> Result<Vec<ForecastSample>> {
    let mut out = Vec::new();
    for clip in clips {
        let seg = Segment::from_clip(clip).normalized(&clip.sport.pitch())?;
        for start in window_starts(seg.frames, history, window, stride) {
            let (h, f) = seg.window(start, history, window)?;
            out.push(ForecastSample { history: h, future: f });
        }
    }
    Ok(out)
}

/// Labelled, normalized event clips. The subtype comes from the clip's
/// `event` tag.
pub fn event_samples(clips: &[&TrajectoryClip]) -> Result<Vec<EventSample>> {
    clips
        .iter()
        .map(|c| {
            let tag = c.meta.event.as_deref().ok_or_else(|| invalid("clip has no event tag"))?;
            Ok(EventSample {
                segment: Segment::from_clip(c).normalized(&c.sport.pitch())?,
                label: EventLabel::from_subtype(tag)?,
            })
        })
        .collect()
}

fn check_task(cfg: &TrainConfig, task: Task) -> Result<()> {
    if cfg.task != task {
        return Err(invalid(format!("config is for {:?}, not {task:?}", cfg.task)));
    }
    Ok(())
}

pub fn train_forecaster(
    model: &mut Forecaster,
    train: &[ForecastSample],
    valid: &[ForecastSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    check_task(cfg, Task::Forecast)?;
    if valid.is_empty() {
        return Err(invalid("empty validation split"));
    }
    let Forecaster {
        config,
        schedule,
        net,
        store,
    } = model;
    let mode = config.mode;
    fit(
        store,
        train.len(),
        cfg,
        |store, batch, rng| {
            let samples: Vec<&ForecastSample> = batch.iter().map(|&i| &train[i]).collect();
            diffusion_loss(net, store, schedule, mode, &samples, rng)
        },
        |store| {
            held_out_loss(net, store, schedule, mode, valid, cfg.batch_size, cfg.seed).map(Validation::from_loss)
        },
    )
}

/// Top-1 type accuracy and mean hierarchical loss.
pub fn evaluate_event(net: &EventNet, store: &ParamStore, l_max: usize, samples: &[EventSample], lambda: f64) -> Result<Validation> {
    if samples.is_empty() {
        return Err(invalid("no validation samples"));
    }
    let mut correct = 0;
    let mut loss = 0.0;
    for chunk in samples.chunks(16) {
        let grids: Vec<TokenGrid> = chunk.iter().map(|s| TokenGrid::event(&s.segment, l_max)).collect();
        let refs: Vec<&TokenGrid> = grids.iter().collect();
        let batch = GridBatch::new(&refs)?;
        let mut g = Graph::new();
        let out = net.forward(&mut g, store, &batch)?;
        for (p, s) in EventNet::predictions(&g, &out)?.iter().zip(chunk) {
            correct += usize::from(p.predicted.event_type == s.label.event_type);
            loss += hierarchical_loss(p, s.label, lambda)?;
        }
    }
    let n = samples.len() as f64;
    Ok(Validation {
        score: correct as f64 / n,
        loss: loss / n,
    })
}

pub fn train_event(
    model: &mut EventClassifier,
    train: &[EventSample],
    valid: &[EventSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    check_task(cfg, Task::Event)?;
    if valid.is_empty() {
        return Err(invalid("empty validation split"));
    }
    let EventClassifier { config, net, store } = model;
    let (l_max, lambda) = (config.backbone.l_max, config.lambda);
    fit(
        store,
        train.len(),
        cfg,
        |store, batch, rng| {
            let grids: Vec<TokenGrid> = batch
                .iter()
                .map(|&i| TokenGrid::event(&flip_augment(&train[i].segment, cfg.flip_prob, cfg.flip_prob, rng), l_max))
                .collect();
            let labels: Vec<EventLabel> = batch.iter().map(|&i| train[i].label).collect();
            event_loss(net, store, &grids, &labels, lambda)
        },
        |store| evaluate_event(net, store, l_max, valid, lambda),
    )
}

/// Continues training a copy of `base` on `subset`.
pub fn finetune_forecaster(
    base: &Forecaster,
    subset: &[ForecastSample],
    valid: &[ForecastSample],
    cfg: &TrainConfig,
) -> Result<(Forecaster, TrainOutcome)> {
    let mut model = base.clone();
    let out = train_forecaster(&mut model, subset, valid, cfg)?;
    Ok((model, out))
}

pub fn finetune_event(
    base: &EventClassifier,
    subset: &[EventSample],
    valid: &[EventSample],
    cfg: &TrainConfig,
) -> Result<(EventClassifier, TrainOutcome)> {
    let mut model = base.clone();
    let out = train_event(&mut model, subset, valid, cfg)?;
    Ok((model, out))
}
