use serde::{Deserialize, Serialize};

use super::model::{EventModel, EventPrediction};
use super::taxonomy::{NUM_SUBTYPES, NUM_TYPES};
use crate::data::Segment;
use crate::diffusion::{rollout, Denoiser, DiffusionSchedule, FutureSampleSet, RolloutConfig};
use crate::error::{invalid, Result};
use crate::numeric::RngStream;

/// Linearly interpolated quantile of sorted data (`(n − 1)·p` positions).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot statistics of one probability across samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("no values to summarize"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            min: v[0],
            p10: quantile(&v, 0.1),
            median: quantile(&v, 0.5),
            p90: quantile(&v, 0.9),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub types: Vec<Spread>,
    /// Over the combined 15-way distribution.
    pub subtypes: Vec<Spread>,
}

impl EventSummary {
    pub fn of(predictions: &[EventPrediction]) -> Result<Self> {
        let column = |f: &dyn Fn(&EventPrediction) -> f64| -> Result<Spread> {
            Spread::of(&predictions.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            types: (0..NUM_TYPES).map(|t| column(&|p| p.type_probs[t])).collect::<Result<_>>()?,
            subtypes: (0..NUM_SUBTYPES).map(|s| column(&|p| p.combined[s])).collect::<Result<_>>()?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct EventForecast {
    pub samples: FutureSampleSet,
    pub predictions: Vec<EventPrediction>,
    pub summary: EventSummary,
}

/// Trailing `frames` frames of a generated future (all of it when shorter).
pub fn classifier_input(future: &Segment, frames: usize) -> Result<Segment> {
    let n = frames.min(future.frames);
    future.slice(future.frames - n, n)
}

/// Rolls out `K` futures, classifies the trailing `frames` of each and
/// summarizes the per-event probabilities across samples.
#[allow(clippy::too_many_arguments)]
pub fn forecast_event<D: Denoiser, M: EventModel + ?Sized>(
    den: &mut D,
    schedule: &DiffusionSchedule,
    history: &Segment,
    future_gt: Option<&Segment>,
    cfg: &RolloutConfig,
    stream: RngStream,
    classifier: &M,
    frames: usize,
) -> Result<EventForecast> {
    let samples = rollout(den, schedule, history, future_gt, cfg, stream)?;
    let inputs = samples
        .futures
        .iter()
        .map(|f| classifier_input(f, frames))
        .collect::<Result<Vec<_>>>()?;
    let predictions = classifier.classify(&inputs)?;
    let summary = EventSummary::of(&predictions)?;
    Ok(EventForecast {
        samples,
        predictions,
        summary,
    })
}
