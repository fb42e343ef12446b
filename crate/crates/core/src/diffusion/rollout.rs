use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::denoiser::Denoiser;
use super::schedule::{denoise_step, DiffusionSchedule, Sampler};
use crate::backbone::{ForecastMode, TokenGrid};
use crate::data::{serialize_clip, Segment, TrajectoryClip};
use crate::error::{invalid, Result};
use crate::numeric::rng::normal_vec;
use crate::numeric::RngStream;

/// Largest accepted gap between a duration and its frame count.
const QUANTIZATION_TOLERANCE: f64 = 0.4;

/// Seconds to the nearest whole frame count.
pub fn seconds_to_frames(seconds: f64, fps: f64) -> Result<usize> {
    let exact = seconds * fps;
    let frames = exact.round();
    if !(exact >= 0.0) || (exact - frames).abs() > QUANTIZATION_TOLERANCE {
        return Err(invalid(format!("{seconds} s is not close to a whole number of frames at {fps} fps")));
    }
    Ok(frames as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub history_frames: usize,
    pub window_frames: usize,
    /// Number of sequential windows `q`.
    pub windows: usize,
    /// Number of independent futures `K`.
    pub samples: usize,
    pub mode: ForecastMode,
    #[serde(default)]
    pub sampler: Sampler,
}

impl RolloutConfig {
    pub fn from_seconds(
        history: f64,
        window: f64,
        horizon: f64,
        fps: f64,
        samples: usize,
        mode: ForecastMode,
        sampler: Sampler,
    ) -> Result<Self> {
        let history_frames = seconds_to_frames(history, fps)?;
        let window_frames = seconds_to_frames(window, fps)?;
        let horizon_frames = seconds_to_frames(horizon, fps)?;
        if window_frames == 0 || horizon_frames % window_frames != 0 {
            return Err(invalid(format!(
                "horizon of {horizon_frames} frames is not a multiple of the {window_frames}-frame window"
            )));
        }
        let cfg = Self {
            history_frames,
            window_frames,
            windows: horizon_frames / window_frames,
            samples,
            mode,
            sampler,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.window_frames == 0 || self.history_frames == 0 {
            return Err(invalid("samples, window and history must be positive"));
        }
        Ok(())
    }

    pub fn horizon_frames(&self) -> usize {
        self.windows * self.window_frames
    }
}

/// `K` futures generated from one shared history.
#[derive(Clone, Debug, PartialEq)]
pub struct FutureSampleSet {
    pub history: Segment,
    pub futures: Vec<Segment>,
    /// Key of the RNG stream that produced each future.
    pub stream_keys: Vec<u64>,
}

impl FutureSampleSet {
    pub fn full(&self, k: usize) -> Result<Segment> {
        self.history.concat(&self.futures[k])
    }
}

/// Runs the reverse process on the noise-target slots of every grid, one
/// RNG per grid. Everything else in the grids is left untouched.
pub fn sample_window<D: Denoiser>(
    den: &mut D,
    schedule: &DiffusionSchedule,
    sampler: Sampler,
    grids: &mut [TokenGrid],
    rngs: &mut [ChaCha8Rng],
) -> Result<()> {
    if grids.len() != rngs.len() {
        return Err(invalid("one RNG per grid is required"));
    }
    for (g, rng) in grids.iter_mut().zip(rngs.iter_mut()) {
        let x = normal_vec(rng, 2 * g.noise_count());
        g.set_noise_values(&x)?;
    }
    for s in (1..=schedule.steps()).rev() {
        let steps = vec![s; grids.len()];
        let eps = den.predict(grids, &steps)?;
        for ((g, e), rng) in grids.iter_mut().zip(&eps).zip(rngs.iter_mut()) {
            let x = denoise_step(&g.noise_values(), e, s, schedule, sampler, rng)?;
            g.set_noise_values(&x)?;
        }
    }
    Ok(())
}

/// Sliding-window rollout of `K` futures.
///
/// `history` holds at least `history_frames` normalized frames; its last
/// `history_frames` are used. In single-team mode `future_gt` must cover the
/// horizon and supplies the opponent (and ball) for every window.
pub fn rollout<D: Denoiser>(
    den: &mut D,
    schedule: &DiffusionSchedule,
    history: &Segment,
    future_gt: Option<&Segment>,
    cfg: &RolloutConfig,
    stream: RngStream,
) -> Result<FutureSampleSet> {
    cfg.validate()?;
    if history.frames < cfg.history_frames {
        return Err(invalid(format!(
            "history has {} frames, rollout needs {}",
            history.frames, cfg.history_frames
        )));
    }
    let history = history.slice(history.frames - cfg.history_frames, cfg.history_frames)?;
    let horizon = cfg.horizon_frames();
    let conditioning = match cfg.mode {
        ForecastMode::Joint => None,
        ForecastMode::Single { .. } => {
            let gt = future_gt.ok_or_else(|| invalid("single-team rollout needs the opponent's future"))?;
            if gt.frames < horizon || gt.players_per_team != history.players_per_team {
                return Err(invalid(format!(
                    "opponent future has {} frames, horizon needs {horizon}",
                    gt.frames
                )));
            }
            Some(gt)
        }
    };
    let k = cfg.samples;
    let streams: Vec<RngStream> = (0..k).map(|i| stream.child(i as u64)).collect();
    let mut rngs: Vec<ChaCha8Rng> = streams.iter().map(|s| s.rng()).collect();
    let mut contexts = vec![history.clone(); k];
    let mut futures = vec![Segment::empty(history.fps, history.players_per_team, 0); k];
    let blank = Segment::empty(history.fps, history.players_per_team, cfg.window_frames);

    for w in 0..cfg.windows {
        let window_gt = match conditioning {
            Some(gt) => gt.slice(w * cfg.window_frames, cfg.window_frames)?,
            None => blank.clone(),
        };
        let mut grids = contexts
            .iter()
            .map(|c| TokenGrid::forecast(c, &window_gt, cfg.mode))
            .collect::<Result<Vec<_>>>()?;
        sample_window(den, schedule, cfg.sampler, &mut grids, &mut rngs)?;
        for i in 0..k {
            let generated = grids[i].future_segment(history.fps);
            futures[i] = futures[i].concat(&generated)?;
            let joined = contexts[i].concat(&generated)?;
            contexts[i] = joined.slice(joined.frames - cfg.history_frames, cfg.history_frames)?;
        }
    }
    Ok(FutureSampleSet {
        history,
        futures,
        stream_keys: streams.iter().map(|s| s.key()).collect(),
    })
}

/// Writes `<stem>_k<index>.json` for every sample and returns the paths.
pub fn write_sample_files(dir: &Path, stem: &str, clips: &[TrajectoryClip]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    clips
        .iter()
        .enumerate()
        .map(|(k, clip)| {
            let path = dir.join(format!("{stem}_k{k}.json"));
            std::fs::write(&path, serialize_clip(clip))?;
            Ok(path)
        })
        .collect()
}
