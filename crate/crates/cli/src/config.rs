use std::path::Path;

use anyhow::{bail, Context, Result};
use gentac_core::backbone::{BackboneConfig, ForecastMode};
use gentac_core::data::{RefineParams, Sport};
use gentac_core::diffusion::{ForecasterConfig, RolloutConfig, Sampler, ScheduleConfig, Setting};
use gentac_core::event::EventConfig;
use gentac_core::train::{LrSchedule, Task, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Every tunable of a run. Durations are in seconds. Unset optional fields
/// fall back to the task defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sport: Sport,
    pub fps: Option<f64>,
    pub seed: u64,

    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub l_max: Option<usize>,
    pub mlp: bool,

    pub history_seconds: f64,
    pub window_seconds: f64,
    pub horizon_seconds: f64,
    pub k: usize,
    pub setting: Setting,
    pub target_side: usize,
    pub predict_ball: bool,
    pub sampler: Sampler,

    pub lr_peak: Option<f64>,
    pub weight_decay: Option<f64>,
    pub warmup_ratio: Option<f64>,
    pub schedule: Option<LrSchedule>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub grad_clip: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub flip_prob: Option<f64>,
    pub valid_fraction: f64,
    /// Window stride in frames; defaults to the window length.
    pub stride: Option<usize>,

    pub lambda: f64,
    pub forecast_frames: Option<usize>,

    pub max_gap: usize,
    pub v_max: f64,
    pub anomaly_count: usize,
    pub gamma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let refine = RefineParams::default();
        Self {
            sport: Sport::Soccer,
            fps: None,
            seed: 0,
            d: 32,
            layers: 2,
            heads: 4,
            l_max: None,
            mlp: false,
            history_seconds: 1.0,
            window_seconds: 0.2,
            horizon_seconds: 1.0,
            k: 20,
            setting: Setting::Unconditioned,
            target_side: 0,
            predict_ball: false,
            sampler: Sampler::Ancestral,
            lr_peak: None,
            weight_decay: None,
            warmup_ratio: None,
            schedule: None,
            epochs: None,
            batch_size: None,
            grad_clip: None,
            early_stop_patience: None,
            flip_prob: None,
            valid_fraction: 0.1,
            stride: None,
            lambda: 1.0,
            forecast_frames: None,
            max_gap: refine.max_gap,
            v_max: refine.v_max,
            anomaly_count: refine.anomaly_count,
            gamma: refine.gamma,
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

impl RunConfig {
    /// File values first, then overrides in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| UsageError(format!("config {}: {}", path.display(), e.message())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            table.insert(key.clone(), override_value(value));
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| UsageError(format!("config: {}", e.message())))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if let Some(fps) = self.fps {
            if !(fps > 0.0 && fps.is_finite()) {
                bail!(UsageError(format!("fps must be positive, got {fps}")));
            }
        }
        if !(0.0..1.0).contains(&self.valid_fraction) {
            bail!(UsageError("valid_fraction must lie in [0, 1)".into()));
        }
        if self.k == 0 {
            bail!(UsageError("k must be at least 1".into()));
        }
        if self.target_side > 1 {
            bail!(UsageError("target_side is 0 or 1".into()));
        }
        Ok(())
    }

    pub fn fps(&self) -> f64 {
        self.fps.unwrap_or(self.sport.native_fps())
    }

    pub fn refine_params(&self) -> RefineParams {
        RefineParams {
            max_gap: self.max_gap,
            v_max: self.v_max,
            anomaly_count: self.anomaly_count,
            gamma: self.gamma,
        }
    }

    pub fn mode(&self) -> ForecastMode {
        match self.setting.mode(self.target_side) {
            ForecastMode::Single { target, .. } => ForecastMode::Single {
                target,
                predict_ball: self.predict_ball,
            },
            joint => joint,
        }
    }

    pub fn train_config(&self, task: Task, finetune: bool) -> Result<TrainConfig> {
        let mut tc = match task {
            Task::Forecast => TrainConfig::forecast(),
            Task::Event => TrainConfig::event(),
        }
        .desk();
        if finetune {
            tc = tc.finetuning();
        }
        tc.seed = self.seed;
        macro_rules! take {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { tc.$field = v; })*};
        }
        take!(lr_peak, weight_decay, warmup_ratio, schedule, epochs, batch_size, grad_clip, early_stop_patience, flip_prob);
        tc.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(tc)
    }

    fn backbone(&self, sport: Sport, l_max: usize, step_embedding: bool) -> BackboneConfig {
        BackboneConfig {
            d: self.d,
            layers: self.layers,
            heads: self.heads,
            players_per_team: sport.players_per_team(),
            l_max,
            mlp: self.mlp,
            step_embedding,
        }
    }

    pub fn forecaster_config(&self, sport: Sport, fps: f64) -> Result<ForecasterConfig> {
        let history_frames = frames(self.history_seconds, fps)?;
        let window_frames = frames(self.window_seconds, fps)?;
        let cfg = ForecasterConfig {
            backbone: self.backbone(sport, self.l_max.unwrap_or(history_frames + window_frames), true),
            schedule: ScheduleConfig::default(),
            sampler: self.sampler,
            mode: self.mode(),
            sport,
            fps,
            history_frames,
            window_frames,
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    /// `longest` is the longest training clip, the default input length.
    pub fn event_config(&self, sport: Sport, fps: f64, longest: usize) -> Result<EventConfig> {
        let l_max = self.l_max.unwrap_or(longest);
        let cfg = EventConfig {
            backbone: self.backbone(sport, l_max, false),
            sport,
            fps,
            forecast_frames: self.forecast_frames.unwrap_or(l_max),
            lambda: self.lambda,
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    /// Rollout for a model trained with `history_frames` at `fps`.
    pub fn rollout_config(&self, fps: f64, history_frames: usize, mode: ForecastMode) -> Result<RolloutConfig> {
        let mut rc = RolloutConfig::from_seconds(
            history_frames as f64 / fps,
            self.window_seconds,
            self.horizon_seconds,
            fps,
            self.k,
            mode,
            self.sampler,
        )
        .map_err(|e| UsageError(e.to_string()))?;
        rc.history_frames = history_frames;
        Ok(rc)
    }
}

fn frames(seconds: f64, fps: f64) -> Result<usize> {
    Ok(gentac_core::diffusion::seconds_to_frames(seconds, fps).map_err(|e| UsageError(e.to_string()))?)
}
