use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::GridBatch;
use super::layers::{Init, Linear, Norm, ParamBuilder};
use crate::error::{invalid, Result};
use crate::numeric::{Array, Graph, GroupLayout, NodeId, ParamId, ParamStore};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneConfig {
    /// Hidden width.
    pub d: usize,
    /// Number of spatial-then-temporal layers.
    pub layers: usize,
    pub heads: usize,
    pub players_per_team: usize,
    /// Temporal embedding capacity.
    pub l_max: usize,
    /// Adds a feed-forward sublayer after each attention block.
    #[serde(default)]
    pub mlp: bool,
    /// Adds the diffusion-step embedding to every token.
    #[serde(default)]
    pub step_embedding: bool,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            d: 256,
            layers: 4,
            heads: 8,
            players_per_team: 11,
            l_max: 250,
            mlp: false,
            step_embedding: true,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || self.d % self.heads != 0 {
            return Err(invalid(format!("d = {} must be a positive multiple of heads = {}", self.d, self.heads)));
        }
        if self.step_embedding && self.d % 2 != 0 {
            return Err(invalid("step embedding needs an even width"));
        }
        if self.players_per_team == 0 || self.l_max == 0 {
            return Err(invalid("players_per_team and l_max must be positive"));
        }
        Ok(())
    }

    pub fn entities(&self) -> usize {
        2 * self.players_per_team + 1
    }
}

#[derive(Clone, Debug)]
struct AttnBlock {
    norm: Norm,
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
}

#[derive(Clone, Debug)]
struct MlpBlock {
    norm: Norm,
    fc1: Linear,
    fc2: Linear,
}

#[derive(Clone, Debug)]
struct Layer {
    spatial: AttnBlock,
    temporal: AttnBlock,
    spatial_mlp: Option<MlpBlock>,
    temporal_mlp: Option<MlpBlock>,
}

/// Factorized spatio-temporal transformer encoder.
#[derive(Clone, Debug)]
pub struct Backbone {
    pub config: BackboneConfig,
    input: Linear,
    temporal: ParamId,
    group: ParamId,
    entity: ParamId,
    step: Option<Linear>,
    layers: Vec<Layer>,
}

fn attn_block(pb: &mut ParamBuilder, name: &str, d: usize) -> Result<AttnBlock> {
    Ok(AttnBlock {
        norm: pb.norm(&format!("{name}.ln"), d)?,
        q: pb.linear(&format!("{name}.q"), d, d)?,
        k: pb.linear(&format!("{name}.k"), d, d)?,
        v: pb.linear(&format!("{name}.v"), d, d)?,
        out: pb.linear(&format!("{name}.o"), d, d)?,
    })
}

fn mlp_block(pb: &mut ParamBuilder, name: &str, d: usize) -> Result<MlpBlock> {
    Ok(MlpBlock {
        norm: pb.norm(&format!("{name}.ln"), d)?,
        fc1: pb.linear(&format!("{name}.fc1"), d, 4 * d)?,
        fc2: pb.linear(&format!("{name}.fc2"), 4 * d, d)?,
    })
}

impl Backbone {
    /// Registers (or binds) all encoder parameters under `prefix`.
    pub fn build(config: BackboneConfig, pb: &mut ParamBuilder, prefix: &str) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let p = |s: &str| format!("{prefix}{s}");
        let input = pb.linear(&p("embed.in"), 2, d)?;
        let temporal = pb.param(&p("embed.time"), &[config.l_max, d], Init::Normal(0.02))?;
        let group = pb.param(&p("embed.group"), &[3, d], Init::Normal(0.02))?;
        let entity = pb.param(&p("embed.entity"), &[config.entities(), d], Init::Normal(0.02))?;
        let step = if config.step_embedding {
            Some(pb.linear(&p("embed.step"), d, d)?)
        } else {
            None
        };
        let mut layers = Vec::with_capacity(config.layers);
        for m in 0..config.layers {
            let name = p(&format!("layer{m}"));
            layers.push(Layer {
                spatial: attn_block(pb, &format!("{name}.spatial"), d)?,
                temporal: attn_block(pb, &format!("{name}.temporal"), d)?,
                spatial_mlp: config
                    .mlp
                    .then(|| mlp_block(pb, &format!("{name}.spatial_mlp"), d))
                    .transpose()?,
                temporal_mlp: config
                    .mlp
                    .then(|| mlp_block(pb, &format!("{name}.temporal_mlp"), d))
                    .transpose()?,
            });
        }
        Ok(Self {
            config,
            input,
            temporal,
            group,
            entity,
            step,
            layers,
        })
    }

    fn check_batch(&self, batch: &GridBatch) -> Result<()> {
        if batch.players_per_team != self.config.players_per_team {
            return Err(invalid(format!(
                "grid has {} players per team, model expects {}",
                batch.players_per_team, self.config.players_per_team
            )));
        }
        if batch.frames > self.config.l_max {
            return Err(invalid(format!(
                "{} frames exceed the temporal table of {}",
                batch.frames, self.config.l_max
            )));
        }
        Ok(())
    }

    /// Token embeddings `[rows, d]`: projection + temporal + group + entity,
    /// plus the step embedding when `steps` is given (one step per batch item).
    pub fn embed(&self, g: &mut Graph, store: &ParamStore, batch: &GridBatch, steps: Option<&[usize]>) -> Result<NodeId> {
        self.check_batch(batch)?;
        let (l, e, n) = (batch.frames, batch.entities, batch.players_per_team);
        let rows = batch.rows();
        let x = g.input(batch.coords.clone())?;
        let mut h = self.input.forward(g, store, x)?;

        let time = g.param(store, self.temporal)?;
        let t_idx = (0..rows).map(|r| (r / e) % l).collect();
        let te = g.gather_rows(time, t_idx)?;
        h = g.add(h, te)?;

        let group = g.param(store, self.group)?;
        let g_idx = (0..rows).map(|r| (r % e) / n).collect();
        let ge = g.gather_rows(group, g_idx)?;
        h = g.add(h, ge)?;

        let entity = g.param(store, self.entity)?;
        let e_idx = (0..rows).map(|r| r % e).collect();
        let ee = g.gather_rows(entity, e_idx)?;
        h = g.add(h, ee)?;

        match (&self.step, steps) {
            (Some(lin), Some(steps)) => {
                if steps.len() != batch.batch {
                    return Err(invalid(format!("{} steps for a batch of {}", steps.len(), batch.batch)));
                }
                let d = self.config.d;
                let mut data = Vec::with_capacity(steps.len() * d);
                for &s in steps {
                    data.extend(sinusoidal(s, d));
                }
                let sin = g.input(Array::new(vec![steps.len(), d], data)?)?;
                let proj = lin.forward(g, store, sin)?;
                let b_idx = (0..rows).map(|r| r / (l * e)).collect();
                let se = g.gather_rows(proj, b_idx)?;
                h = g.add(h, se)?;
            }
            (None, None) => {}
            (Some(_), None) => return Err(invalid("model expects a diffusion step")),
            (None, Some(_)) => return Err(invalid("model has no step embedding")),
        }
        Ok(h)
    }

    /// Embedding followed by `M` spatial-then-temporal layers: `[rows, d]`.
    pub fn encode(&self, g: &mut Graph, store: &ParamStore, batch: &GridBatch, steps: Option<&[usize]>) -> Result<NodeId> {
        let mut h = self.embed(g, store, batch, steps)?;
        let spatial = GroupLayout::spatial(batch.batch, batch.frames, batch.entities);
        let temporal = GroupLayout::temporal(batch.batch, batch.frames, batch.entities);
        for layer in &self.layers {
            h = self.attend(g, store, h, &layer.spatial, &spatial, &batch.visible)?;
            if let Some(mlp) = &layer.spatial_mlp {
                h = feed_forward(g, store, h, mlp)?;
            }
            h = self.attend(g, store, h, &layer.temporal, &temporal, &batch.visible)?;
            if let Some(mlp) = &layer.temporal_mlp {
                h = feed_forward(g, store, h, mlp)?;
            }
        }
        Ok(h)
    }

    fn attend(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        h: NodeId,
        blk: &AttnBlock,
        layout: &GroupLayout,
        mask: &Arc<Vec<bool>>,
    ) -> Result<NodeId> {
        let x = blk.norm.forward(g, store, h)?;
        let q = blk.q.forward(g, store, x)?;
        let k = blk.k.forward(g, store, x)?;
        let v = blk.v.forward(g, store, x)?;
        let a = g.attention(q, k, v, layout, mask.clone(), self.config.heads)?;
        let o = blk.out.forward(g, store, a)?;
        g.add(h, o)
    }
}

fn feed_forward(g: &mut Graph, store: &ParamStore, h: NodeId, mlp: &MlpBlock) -> Result<NodeId> {
    let x = mlp.norm.forward(g, store, h)?;
    let y = mlp.fc1.forward(g, store, x)?;
    let y = g.relu(y)?;
    let y = mlp.fc2.forward(g, store, y)?;
    g.add(h, y)
}

/// `[sin(s·f_0), …, sin(s·f_{d/2−1}), cos(s·f_0), …]`, `f_i = 10000^(−i/(d/2))`.
pub fn sinusoidal(step: usize, d: usize) -> Vec<f64> {
    let half = d / 2;
    let s = step as f64;
    let freqs: Vec<f64> = (0..half)
        .map(|i| (-(10000f64).ln() * i as f64 / half as f64).exp())
        .collect();
    freqs
        .iter()
        .map(|f| (s * f).sin())
        .chain(freqs.iter().map(|f| (s * f).cos()))
        .collect()
}
