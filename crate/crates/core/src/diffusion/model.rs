use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::denoiser::Denoiser;
use super::schedule::{forward_noise, DiffusionSchedule, Sampler, ScheduleConfig};
use crate::backbone::{
    load_checkpoint, save_checkpoint, Backbone, BackboneConfig, Checkpoint, ForecastMode, GridBatch, Init, Linear, Norm,
    ParamBuilder, TokenGrid,
};
use crate::data::{Segment, Sport};
use crate::error::{invalid, Error, Result};
use crate::numeric::{Array, Graph, NodeId, ParamStore, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecasterConfig {
    pub backbone: BackboneConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub sampler: Sampler,
    pub mode: ForecastMode,
    pub sport: Sport,
    pub fps: f64,
    pub history_frames: usize,
    pub window_frames: usize,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            backbone: BackboneConfig::default(),
            schedule: ScheduleConfig::default(),
            sampler: Sampler::Ancestral,
            mode: ForecastMode::Joint,
            sport: Sport::Soccer,
            fps: 25.0,
            history_frames: 100,
            window_frames: 5,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<()> {
        self.backbone.validate()?;
        if !self.backbone.step_embedding {
            return Err(invalid("a forecaster needs the step embedding"));
        }
        if self.history_frames == 0 || self.window_frames == 0 {
            return Err(invalid("history and window must be at least one frame"));
        }
        if self.history_frames + self.window_frames > self.backbone.l_max {
            return Err(invalid(format!(
                "history {} + window {} exceed l_max {}",
                self.history_frames, self.window_frames, self.backbone.l_max
            )));
        }
        if self.backbone.players_per_team != self.sport.players_per_team() {
            return Err(invalid(format!(
                "{} is played with {} per team, config says {}",
                self.sport,
                self.sport.players_per_team(),
                self.backbone.players_per_team
            )));
        }
        Ok(())
    }
}

/// A normalized training window: `history_frames` then `window_frames`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastSample {
    pub history: Segment,
    pub future: Segment,
}

/// Parameter handles of the noise-prediction network.
#[derive(Clone, Debug)]
pub struct ForecastNet {
    pub backbone: Backbone,
    head_norm: Norm,
    head: Linear,
}

impl ForecastNet {
    pub fn build(cfg: &ForecasterConfig, pb: &mut ParamBuilder) -> Result<Self> {
        let backbone = Backbone::build(cfg.backbone.clone(), pb, "")?;
        let d = cfg.backbone.d;
        Ok(Self {
            backbone,
            head_norm: pb.norm("head.ln", d)?,
            head: Linear {
                w: pb.param("head.out.w", &[d, 2], Init::Normal(0.02))?,
                b: pb.param("head.out.b", &[2], Init::Zeros)?,
            },
        })
    }

    /// Predicted noise for every token, `[rows, 2]`.
    pub fn predict(&self, g: &mut Graph, store: &ParamStore, batch: &GridBatch, steps: &[usize]) -> Result<NodeId> {
        let h = self.backbone.encode(g, store, batch, Some(steps))?;
        let h = self.head_norm.forward(g, store, h)?;
        self.head.forward(g, store, h)
    }
}

#[derive(Clone, Debug)]
pub struct Forecaster {
    pub config: ForecasterConfig,
    pub schedule: DiffusionSchedule,
    pub net: ForecastNet,
    pub store: ParamStore,
}

impl Forecaster {
    pub fn new(config: ForecasterConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let net = ForecastNet::build(&config, &mut ParamBuilder::create(&mut store, RngStream::new(seed).fork("init").rng()))?;
        Ok(Self {
            schedule: DiffusionSchedule::new(&config.schedule)?,
            config,
            net,
            store,
        })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.header.get("kind").and_then(|k| k.as_str()) != Some("forecaster") {
            return Err(Error::Checkpoint("not a forecaster checkpoint".into()));
        }
        let config: ForecasterConfig = serde_json::from_value(ck.header["config"].clone())
            .map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
        config.validate()?;
        let mut store = ck.params;
        let net = ForecastNet::build(&config, &mut ParamBuilder::bind(&mut store))?;
        if store.len() != count_params(&config)? {
            return Err(Error::Checkpoint("checkpoint has unexpected parameters".into()));
        }
        Ok(Self {
            schedule: DiffusionSchedule::new(&config.schedule)?,
            config,
            net,
            store,
        })
    }

    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "forecaster", "config": self.config })
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        save_checkpoint(path, &self.header(), &self.store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(load_checkpoint(path)?)
    }

    pub fn grid(&self, sample: &ForecastSample) -> Result<TokenGrid> {
        TokenGrid::forecast(&sample.history, &sample.future, self.config.mode)
    }

    pub fn denoiser(&self) -> NetDenoiser<'_> {
        NetDenoiser {
            net: &self.net,
            store: &self.store,
        }
    }
}

fn count_params(cfg: &ForecasterConfig) -> Result<usize> {
    let mut store = ParamStore::new();
    ForecastNet::build(cfg, &mut ParamBuilder::create(&mut store, RngStream::new(0).rng()))?;
    Ok(store.len())
}

/// Noise-prediction loss on a batch: one uniform step per sample, mean
/// squared error over observed noise-target coordinates.
pub fn diffusion_loss<R: Rng + ?Sized>(
    net: &ForecastNet,
    store: &ParamStore,
    schedule: &DiffusionSchedule,
    mode: ForecastMode,
    samples: &[&ForecastSample],
    rng: &mut R,
) -> Result<(Graph, NodeId)> {
    let mut grids = Vec::with_capacity(samples.len());
    let mut steps = Vec::with_capacity(samples.len());
    let mut eps_all = Vec::with_capacity(samples.len());
    for s in samples {
        let mut grid = TokenGrid::forecast(&s.history, &s.future, mode)?;
        let step = rng.random_range(1..=schedule.steps());
        let (x_s, eps) = forward_noise(&grid.noise_values(), step, schedule, rng)?;
        grid.set_noise_values(&x_s)?;
        grids.push(grid);
        steps.push(step);
        eps_all.push(eps);
    }
    loss_on_grids(net, store, &grids, &steps, &eps_all)
}

/// Loss for already-noised grids with known noise.
pub fn loss_on_grids(
    net: &ForecastNet,
    store: &ParamStore,
    grids: &[TokenGrid],
    steps: &[usize],
    eps: &[Vec<f64>],
) -> Result<(Graph, NodeId)> {
    let refs: Vec<&TokenGrid> = grids.iter().collect();
    let batch = GridBatch::new(&refs)?;
    let mut target = vec![0.0; batch.rows() * 2];
    let mut row = 0;
    for (grid, e) in grids.iter().zip(eps) {
        let mut it = e.chunks_exact(2);
        for &n in &grid.noise_target {
            if n {
                let v = it.next().ok_or_else(|| invalid("too few noise values"))?;
                target[2 * row] = v[0];
                target[2 * row + 1] = v[1];
            }
            row += 1;
        }
    }
    let mask: Vec<bool> = batch
        .noise_target
        .iter()
        .zip(batch.observed.iter())
        .map(|(n, o)| *n && *o)
        .collect();
    let mut g = Graph::new();
    let pred = net.predict(&mut g, store, &batch, steps)?;
    let loss = g.masked_mse(pred, Array::new(vec![batch.rows(), 2], target)?, std::sync::Arc::new(mask))?;
    Ok((g, loss))
}

/// Mean loss over `samples` with a fixed RNG, in batches of `batch_size`.
pub fn validation_loss(model: &Forecaster, samples: &[ForecastSample], batch_size: usize, seed: u64) -> Result<f64> {
    held_out_loss(&model.net, &model.store, &model.schedule, model.config.mode, samples, batch_size, seed)
}

/// [`validation_loss`] on explicit parts.
pub fn held_out_loss(
    net: &ForecastNet,
    store: &ParamStore,
    schedule: &DiffusionSchedule,
    mode: ForecastMode,
    samples: &[ForecastSample],
    batch_size: usize,
    seed: u64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("no validation samples"));
    }
    let mut rng = RngStream::new(seed).fork("validation").rng();
    let mut total = 0.0;
    for chunk in samples.chunks(batch_size.max(1)) {
        let refs: Vec<&ForecastSample> = chunk.iter().collect();
        let (g, l) = diffusion_loss(net, store, schedule, mode, &refs, &mut rng)?;
        total += g.value(l).item() * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// The trained network as a [`Denoiser`].
pub struct NetDenoiser<'a> {
    pub net: &'a ForecastNet,
    pub store: &'a ParamStore,
}

impl Denoiser for NetDenoiser<'_> {
    fn predict(&mut self, grids: &[TokenGrid], steps: &[usize]) -> Result<Vec<Vec<f64>>> {
        let refs: Vec<&TokenGrid> = grids.iter().collect();
        let batch = GridBatch::new(&refs)?;
        let mut g = Graph::new();
        let pred = self.net.predict(&mut g, self.store, &batch, steps)?;
        let values = g.value(pred).data();
        let tokens = batch.frames * batch.entities;
        Ok(grids
            .iter()
            .enumerate()
            .map(|(b, grid)| {
                grid.noise_target
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| **n)
                    .flat_map(|(t, _)| {
                        let r = b * tokens + t;
                        [values[2 * r], values[2 * r + 1]]
                    })
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::normal_vec;

    pub(crate) fn tiny_config() -> ForecasterConfig {
        ForecasterConfig {
            backbone: BackboneConfig {
                d: 8,
                layers: 1,
                heads: 2,
                players_per_team: 5,
                l_max: 8,
                mlp: false,
                step_embedding: true,
            },
            schedule: ScheduleConfig {
                steps: 10,
                ..Default::default()
            },
            sampler: Sampler::Ancestral,
            mode: ForecastMode::Joint,
            sport: Sport::Basketball,
            fps: 5.0,
            history_frames: 4,
            window_frames: 2,
        }
    }

    pub(crate) fn sample(seed: u64) -> ForecastSample {
        let mut rng = RngStream::new(seed).rng();
        let mut seg = Segment::empty(5.0, 5, 6);
        for t in 0..6 {
            for e in 0..11 {
                seg.set(t, e, Some([rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]));
            }
        }
        let (history, future) = seg.window(0, 4, 2).unwrap();
        ForecastSample { history, future }
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = Forecaster::new(tiny_config(), 1).unwrap();
        let dir = std::env::temp_dir().join(format!("gentac-ck-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.ckpt");
        model.save(&path).unwrap();
        let back = Forecaster::load(&path).unwrap();
        assert_eq!(back.config, model.config);
        let s = sample(3);
        let grid = model.grid(&s).unwrap();
        let a = model.denoiser().predict(&[grid.clone()], &[4]).unwrap();
        let b = back.denoiser().predict(&[grid], &[4]).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn oracle_prediction_gives_zero_loss() {
        // Oracle wiring: the target noise is the network's own prediction.
        let model = Forecaster::new(tiny_config(), 2).unwrap();
        let s = sample(4);
        let mut grid = model.grid(&s).unwrap();
        let mut rng = RngStream::new(9).rng();
        let (x_s, _) = forward_noise(&grid.noise_values(), 5, &model.schedule, &mut rng).unwrap();
        grid.set_noise_values(&x_s).unwrap();
        let pred = model.denoiser().predict(&[grid.clone()], &[5]).unwrap();
        let (g, l) = loss_on_grids(&model.net, &model.store, &[grid.clone()], &[5], &pred).unwrap();
        assert!(g.value(l).item().abs() < 1e-24);
        let eps = normal_vec(&mut rng, pred[0].len());
        let (g, l) = loss_on_grids(&model.net, &model.store, &[grid], &[5], &[eps.clone()]).unwrap();
        let direct = pred[0].iter().zip(&eps).map(|(p, e)| (p - e).powi(2)).sum::<f64>() / eps.len() as f64;
        assert!((g.value(l).item() - direct).abs() < 1e-12);
    }

    #[test]
    fn unobserved_targets_are_excluded() {
        let model = Forecaster::new(tiny_config(), 3).unwrap();
        let mut s = sample(5);
        s.future.set(0, 2, None);
        let grid = model.grid(&s).unwrap();
        assert_eq!(grid.noise_count(), 22);
        let eps = vec![vec![0.0; 44]];
        let pred = model.denoiser().predict(&[grid.clone()], &[3]).unwrap();
        let mut eps_changed = eps.clone();
        let slot = 2;
        eps_changed[0][2 * slot] = 100.0;
        let (g1, l1) = loss_on_grids(&model.net, &model.store, &[grid.clone()], &[3], &eps).unwrap();
        let (g2, l2) = loss_on_grids(&model.net, &model.store, &[grid], &[3], &eps_changed).unwrap();
        assert_eq!(g1.value(l1).item(), g2.value(l2).item());
        assert!(pred[0].len() == 44);
    }

    #[test]
    fn zero_output_gives_unit_loss() {
        let mut model = Forecaster::new(tiny_config(), 5).unwrap();
        for name in ["head.out.w", "head.out.b"] {
            let id = model.store.id(name).unwrap();
            let zeros = Array::zeros(model.store.value(id).shape());
            model.store.set_value(id, zeros).unwrap();
        }
        let samples: Vec<ForecastSample> = (0..200).map(sample).collect();
        let v = validation_loss(&model, &samples, 50, 1).unwrap();
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn untrained_loss_is_near_unit_variance() {
        let model = Forecaster::new(tiny_config(), 4).unwrap();
        let samples: Vec<ForecastSample> = (0..64).map(sample).collect();
        let v = validation_loss(&model, &samples, 16, 0).unwrap();
        assert!((0.8..1.3).contains(&v), "{v}");
    }
}
