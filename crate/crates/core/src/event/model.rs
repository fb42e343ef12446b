use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::taxonomy::{EventLabel, Taxonomy, NUM_SUBTYPES, NUM_TYPES};
use crate::backbone::{
    load_checkpoint, save_checkpoint, Backbone, BackboneConfig, Checkpoint, GridBatch, Linear, Norm, ParamBuilder,
    TokenGrid,
};
use crate::data::{Segment, Sport, TrajectoryClip};
use crate::error::{invalid, Error, Result};
use crate::numeric::array::softmax_slice;
use crate::numeric::{Graph, GroupLayout, NodeId, ParamStore, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    pub backbone: BackboneConfig,
    pub sport: Sport,
    pub fps: f64,
    /// Trailing frames of a generated future fed to the classifier.
    pub forecast_frames: usize,
    /// Weight of the subtype term in the loss.
    pub lambda: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            backbone: BackboneConfig {
                step_embedding: false,
                ..BackboneConfig::default()
            },
            sport: Sport::Soccer,
            fps: 25.0,
            forecast_frames: 100,
            lambda: 1.0,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        self.backbone.validate()?;
        if self.backbone.step_embedding {
            return Err(invalid("the event classifier takes no diffusion step"));
        }
        if self.backbone.players_per_team != self.sport.players_per_team() {
            return Err(invalid(format!(
                "{} is played with {} per team, config says {}",
                self.sport,
                self.sport.players_per_team(),
                self.backbone.players_per_team
            )));
        }
        if self.forecast_frames == 0 || self.forecast_frames > self.backbone.l_max {
            return Err(invalid(format!(
                "forecast_frames {} must lie in 1..={}",
                self.forecast_frames, self.backbone.l_max
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be a finite non-negative number"));
        }
        Ok(())
    }
}

/// Type distribution, per-type subtype distributions, their product over
/// all 15 subtypes and the routed prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventPrediction {
    pub type_probs: Vec<f64>,
    pub subtype_probs: Vec<Vec<f64>>,
    pub combined: Vec<f64>,
    /// Argmax type, then the argmax of that type's subtype head.
    pub predicted: EventLabel,
}

impl EventPrediction {
    pub fn from_logits(type_logits: &[f64], sub_logits: &[Vec<f64>]) -> Result<Self> {
        if type_logits.len() != NUM_TYPES || sub_logits.len() != NUM_TYPES {
            return Err(invalid("expected one type logit and one subtype head per type"));
        }
        let sub: Vec<Vec<f64>> = sub_logits.iter().map(|l| softmax_slice(l)).collect();
        Self::from_probs(softmax_slice(type_logits), sub)
    }

    pub fn from_probs(type_probs: Vec<f64>, subtype_probs: Vec<Vec<f64>>) -> Result<Self> {
        if type_probs.len() != NUM_TYPES
            || subtype_probs.len() != NUM_TYPES
            || (0..NUM_TYPES).any(|t| subtype_probs[t].len() != Taxonomy.subtype_count(t))
        {
            return Err(invalid("probability vectors do not match the taxonomy"));
        }
        let mut combined = Vec::with_capacity(NUM_SUBTYPES);
        for (pt, subs) in type_probs.iter().zip(&subtype_probs) {
            combined.extend(subs.iter().map(|ps| pt * ps));
        }
        let t = argmax(&type_probs);
        let predicted = EventLabel {
            event_type: t,
            subtype: argmax(&subtype_probs[t]),
        };
        Ok(Self {
            type_probs,
            subtype_probs,
            combined,
            predicted,
        })
    }

    /// Type indices by decreasing probability.
    pub fn ranked_types(&self) -> Vec<usize> {
        ranked(&self.type_probs)
    }

    /// Global subtype indices by decreasing combined probability.
    pub fn ranked_subtypes(&self) -> Vec<usize> {
        ranked(&self.combined)
    }

    pub fn type_hit(&self, label: EventLabel, k: usize) -> bool {
        self.ranked_types().iter().take(k).any(|&t| t == label.event_type)
    }

    pub fn subtype_hit(&self, label: EventLabel, k: usize) -> bool {
        self.ranked_subtypes().iter().take(k).any(|&s| s == label.global())
    }
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn ranked(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// `−ln p(type) − λ·ln p(subtype | true type)`.
pub fn hierarchical_loss(pred: &EventPrediction, label: EventLabel, lambda: f64) -> Result<f64> {
    let label = EventLabel::new(label.event_type, label.subtype)?;
    let type_ce = -pred.type_probs[label.event_type].ln();
    if lambda == 0.0 {
        return Ok(type_ce);
    }
    Ok(type_ce - lambda * pred.subtype_probs[label.event_type][label.subtype].ln())
}

/// Scalar importance score per token (`d → d → 1`, tanh hidden layer),
/// softmax over unmasked tokens of each group, weighted sum.
#[derive(Clone, Debug)]
pub struct AttentionPool {
    pub hidden: Linear,
    pub score: Linear,
}

impl AttentionPool {
    pub fn build(pb: &mut ParamBuilder, prefix: &str, d: usize) -> Result<Self> {
        Ok(Self {
            hidden: pb.linear(&format!("{prefix}.hidden"), d, d)?,
            score: pb.linear(&format!("{prefix}.score"), d, 1)?,
        })
    }

    /// Pooled vectors `[groups, d]` and the token weights `[rows, 1]`.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        h: NodeId,
        layout: &GroupLayout,
        mask: Arc<Vec<bool>>,
    ) -> Result<(NodeId, NodeId)> {
        let s = self.hidden.forward(g, store, h)?;
        let s = g.tanh(s)?;
        let s = self.score.forward(g, store, s)?;
        let a = g.masked_softmax(s, layout, mask)?;
        Ok((g.pool(a, h, layout)?, a))
    }
}

#[derive(Clone, Debug)]
pub struct EventNet {
    pub backbone: Backbone,
    pub norm: Norm,
    pub pool: AttentionPool,
    pub type_head: Linear,
    pub sub_heads: Vec<Linear>,
}

/// Graph nodes of one forward pass.
#[derive(Clone, Debug)]
pub struct EventOutputs {
    pub pooled: NodeId,
    pub weights: NodeId,
    pub type_logits: NodeId,
    pub sub_logits: Vec<NodeId>,
}

impl EventNet {
    pub fn build(cfg: &EventConfig, pb: &mut ParamBuilder) -> Result<Self> {
        let backbone = Backbone::build(cfg.backbone.clone(), pb, "")?;
        let d = cfg.backbone.d;
        Ok(Self {
            backbone,
            norm: pb.norm("pool.ln", d)?,
            pool: AttentionPool::build(pb, "pool", d)?,
            type_head: pb.linear("head.type", d, NUM_TYPES)?,
            sub_heads: (0..NUM_TYPES)
                .map(|t| pb.linear(&format!("head.sub{t}"), d, Taxonomy.subtype_count(t)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, batch: &GridBatch) -> Result<EventOutputs> {
        let h = self.backbone.encode(g, store, batch, None)?;
        let h = self.norm.forward(g, store, h)?;
        let layout = GroupLayout::contiguous(batch.batch, batch.frames * batch.entities);
        let (pooled, weights) = self.pool.forward(g, store, h, &layout, batch.visible.clone())?;
        self.classify(g, store, pooled, weights)
    }

    fn classify(&self, g: &mut Graph, store: &ParamStore, pooled: NodeId, weights: NodeId) -> Result<EventOutputs> {
        let type_logits = self.type_head.forward(g, store, pooled)?;
        let sub_logits = self
            .sub_heads
            .iter()
            .map(|h| h.forward(g, store, pooled))
            .collect::<Result<_>>()?;
        Ok(EventOutputs {
            pooled,
            weights,
            type_logits,
            sub_logits,
        })
    }

    /// Predictions read off a finished forward pass.
    pub fn predictions(g: &Graph, out: &EventOutputs) -> Result<Vec<EventPrediction>> {
        let tl = g.value(out.type_logits);
        let b = tl.rows();
        (0..b)
            .map(|i| {
                let subs: Vec<Vec<f64>> = out
                    .sub_logits
                    .iter()
                    .map(|&n| {
                        let v = g.value(n);
                        let c = v.last_dim();
                        v.data()[i * c..(i + 1) * c].to_vec()
                    })
                    .collect();
                EventPrediction::from_logits(&tl.data()[i * NUM_TYPES..(i + 1) * NUM_TYPES], &subs)
            })
            .collect()
    }
}

/// Type cross-entropy plus `lambda` times the subtype cross-entropy of the
/// ground-truth type's head, both averaged over the batch.
pub fn event_loss(
    net: &EventNet,
    store: &ParamStore,
    grids: &[TokenGrid],
    labels: &[EventLabel],
    lambda: f64,
) -> Result<(Graph, NodeId)> {
    if grids.len() != labels.len() {
        return Err(invalid("one label per grid is required"));
    }
    for l in labels {
        EventLabel::new(l.event_type, l.subtype)?;
    }
    let refs: Vec<&TokenGrid> = grids.iter().collect();
    let batch = GridBatch::new(&refs)?;
    let mut g = Graph::new();
    let out = net.forward(&mut g, store, &batch)?;
    let b = labels.len() as f64;
    let mut loss = g.cross_entropy(out.type_logits, labels.iter().map(|l| l.event_type).collect(), b)?;
    if lambda != 0.0 {
        let mut sub_total = None;
        for (t, &logits) in out.sub_logits.iter().enumerate() {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].event_type == t).collect();
            if rows.is_empty() {
                continue;
            }
            let targets = rows.iter().map(|&i| labels[i].subtype).collect();
            let picked = g.gather_rows(logits, rows)?;
            let ce = g.cross_entropy(picked, targets, b)?;
            sub_total = Some(match sub_total {
                None => ce,
                Some(acc) => g.add(acc, ce)?,
            });
        }
        if let Some(s) = sub_total {
            let s = g.scale(s, lambda)?;
            loss = g.add(loss, s)?;
        }
    }
    Ok((g, loss))
}

/// Anything that maps normalized segments to event predictions.
pub trait EventModel {
    fn classify(&self, segments: &[Segment]) -> Result<Vec<EventPrediction>>;
}

/// Returns the same prediction for every input.
#[derive(Clone, Debug)]
pub struct ConstantModel(pub EventPrediction);

impl EventModel for ConstantModel {
    fn classify(&self, segments: &[Segment]) -> Result<Vec<EventPrediction>> {
        Ok(vec![self.0.clone(); segments.len()])
    }
}

/// A labelled, normalized event clip.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSample {
    pub segment: Segment,
    pub label: EventLabel,
}

#[derive(Clone, Debug)]
pub struct EventClassifier {
    pub config: EventConfig,
    pub net: EventNet,
    pub store: ParamStore,
}

const INFERENCE_BATCH: usize = 16;

impl EventClassifier {
    pub fn new(config: EventConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let net = EventNet::build(&config, &mut ParamBuilder::create(&mut store, RngStream::new(seed).fork("init").rng()))?;
        Ok(Self { config, net, store })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.header.get("kind").and_then(|k| k.as_str()) != Some("event") {
            return Err(Error::Checkpoint("not an event checkpoint".into()));
        }
        let config: EventConfig = serde_json::from_value(ck.header["config"].clone())
            .map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
        config.validate()?;
        let mut store = ck.params;
        let net = EventNet::build(&config, &mut ParamBuilder::bind(&mut store))?;
        let mut fresh = ParamStore::new();
        EventNet::build(&config, &mut ParamBuilder::create(&mut fresh, RngStream::new(0).rng()))?;
        if store.len() != fresh.len() {
            return Err(Error::Checkpoint("checkpoint has unexpected parameters".into()));
        }
        Ok(Self { config, net, store })
    }

    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "event", "config": self.config })
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        save_checkpoint(path, &self.header(), &self.store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(load_checkpoint(path)?)
    }

    pub fn grid(&self, segment: &Segment) -> TokenGrid {
        TokenGrid::event(segment, self.config.backbone.l_max)
    }

    /// Normalized clip segment for grounding.
    pub fn prepare(&self, clip: &TrajectoryClip) -> Result<Segment> {
        if clip.frames.is_empty() {
            return Err(invalid("cannot classify an empty clip"));
        }
        Segment::from_clip(clip).normalized(&clip.sport.pitch())
    }

    /// Encode, pool, classify.
    pub fn ground_event(&self, clip: &TrajectoryClip) -> Result<EventPrediction> {
        let seg = self.prepare(clip)?;
        Ok(self.classify(std::slice::from_ref(&seg))?.remove(0))
    }
}

impl EventModel for EventClassifier {
    fn classify(&self, segments: &[Segment]) -> Result<Vec<EventPrediction>> {
        let mut out = Vec::with_capacity(segments.len());
        for chunk in segments.chunks(INFERENCE_BATCH) {
            let grids: Vec<TokenGrid> = chunk.iter().map(|s| self.grid(s)).collect();
            if grids.iter().any(|g| !g.visible.iter().any(|v| *v)) {
                return Err(invalid("cannot classify a clip with no visible entity"));
            }
            let refs: Vec<&TokenGrid> = grids.iter().collect();
            let batch = GridBatch::new(&refs)?;
            let mut g = Graph::new();
            let o = self.net.forward(&mut g, &self.store, &batch)?;
            out.extend(EventNet::predictions(&g, &o)?);
        }
        Ok(out)
    }
}
