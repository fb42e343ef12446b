use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Point, Segment};
use crate::error::{invalid, Result};
use crate::numeric::Array;

/// Which future slots the diffusion process generates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ForecastMode {
    /// Both teams and the ball.
    Joint,
    /// One team; the opponent's future is ground truth. The ball is
    /// generated only when `predict_ball` is set.
    Single { target: usize, predict_ball: bool },
}

impl ForecastMode {
    pub fn single(target: usize) -> Self {
        ForecastMode::Single {
            target,
            predict_ball: false,
        }
    }

    /// Whether entity slot `e` is generated in this mode.
    pub fn generates(&self, e: usize, players_per_team: usize) -> bool {
        match *self {
            ForecastMode::Joint => true,
            ForecastMode::Single { target, predict_ball } => {
                if e == 2 * players_per_team {
                    predict_ball
                } else {
                    e / players_per_team == target
                }
            }
        }
    }
}

/// Token layout `L × (2N + 1)`, entities ordered team0, team1, ball.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenGrid {
    pub players_per_team: usize,
    pub frames: usize,
    pub history: usize,
    pub coords: Vec<Point>,
    pub visible: Vec<bool>,
    pub noise_target: Vec<bool>,
    /// Future ground truth exists at a noise-target slot.
    pub observed: Vec<bool>,
}

impl TokenGrid {
    pub fn entities(&self) -> usize {
        2 * self.players_per_team + 1
    }

    pub fn tokens(&self) -> usize {
        self.frames * self.entities()
    }

    /// History plus future. Target slots carry the future segment's values
    /// until replaced with [`TokenGrid::set_noise_values`]. A slot takes part
    /// in generation only if it is observed somewhere in the history.
    pub fn forecast(history: &Segment, future: &Segment, mode: ForecastMode) -> Result<Self> {
        let n = history.players_per_team;
        if future.players_per_team != n {
            return Err(invalid(format!(
                "roster mismatch: history has {n} players per team, future {}",
                future.players_per_team
            )));
        }
        if let ForecastMode::Single { target, .. } = mode {
            if target > 1 {
                return Err(invalid(format!("target team must be 0 or 1, got {target}")));
            }
        }
        let e_count = 2 * n + 1;
        let active: Vec<bool> = (0..e_count)
            .map(|e| (0..history.frames).any(|t| history.visible[history.idx(t, e)]))
            .collect();
        let frames = history.frames + future.frames;
        let mut grid = Self {
            players_per_team: n,
            frames,
            history: history.frames,
            coords: history.coords.clone(),
            visible: history.visible.clone(),
            noise_target: vec![false; history.coords.len()],
            observed: vec![false; history.coords.len()],
        };
        for t in 0..future.frames {
            for e in 0..e_count {
                let i = future.idx(t, e);
                let generated = mode.generates(e, n);
                let target = active[e] && generated;
                grid.coords.push(if generated && !target { [0.0; 2] } else { future.coords[i] });
                grid.visible.push(if generated { target } else { future.visible[i] });
                grid.noise_target.push(target);
                grid.observed.push(target && future.visible[i]);
            }
        }
        Ok(grid)
    }

    /// Event clip padded or truncated to `l_max` frames.
    pub fn event(seg: &Segment, l_max: usize) -> Self {
        let e_count = seg.entities();
        let keep = seg.frames.min(l_max);
        let mut coords = seg.coords[..keep * e_count].to_vec();
        let mut visible = seg.visible[..keep * e_count].to_vec();
        coords.resize(l_max * e_count, [0.0; 2]);
        visible.resize(l_max * e_count, false);
        Self {
            players_per_team: seg.players_per_team,
            frames: l_max,
            history: l_max,
            coords,
            visible,
            noise_target: vec![false; l_max * e_count],
            observed: vec![false; l_max * e_count],
        }
    }

    pub fn noise_count(&self) -> usize {
        self.noise_target.iter().filter(|b| **b).count()
    }

    /// Flat `[x, y, x, y, ...]` over noise-target slots in token order.
    pub fn noise_values(&self) -> Vec<f64> {
        self.coords
            .iter()
            .zip(&self.noise_target)
            .filter(|(_, &n)| n)
            .flat_map(|(p, _)| *p)
            .collect()
    }

    pub fn set_noise_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != 2 * self.noise_count() {
            return Err(invalid(format!(
                "expected {} noise values, got {}",
                2 * self.noise_count(),
                values.len()
            )));
        }
        let mut it = values.chunks_exact(2);
        for (p, &n) in self.coords.iter_mut().zip(&self.noise_target) {
            if n {
                let v = it.next().unwrap();
                *p = [v[0], v[1]];
            }
        }
        Ok(())
    }

    /// The future part as a segment (all frames from `history` on).
    pub fn future_segment(&self, fps: f64) -> Segment {
        let start = self.history * self.entities();
        Segment {
            fps,
            players_per_team: self.players_per_team,
            frames: self.frames - self.history,
            coords: self.coords[start..].to_vec(),
            visible: self.visible[start..].to_vec(),
        }
    }
}

/// Grids with identical dimensions stacked along a batch axis.
#[derive(Clone, Debug)]
pub struct GridBatch {
    pub batch: usize,
    pub frames: usize,
    pub entities: usize,
    pub players_per_team: usize,
    /// `[rows, 2]` with rows ordered (batch, frame, entity).
    pub coords: Array,
    pub visible: Arc<Vec<bool>>,
    pub noise_target: Arc<Vec<bool>>,
    pub observed: Arc<Vec<bool>>,
}

impl GridBatch {
    pub fn new(grids: &[&TokenGrid]) -> Result<Self> {
        let first = grids.first().ok_or_else(|| invalid("empty batch"))?;
        if grids
            .iter()
            .any(|g| g.frames != first.frames || g.players_per_team != first.players_per_team)
        {
            return Err(invalid("batched grids must share frames and team size"));
        }
        let rows = grids.len() * first.tokens();
        let mut coords = Vec::with_capacity(rows * 2);
        let mut visible = Vec::with_capacity(rows);
        let mut noise = Vec::with_capacity(rows);
        let mut observed = Vec::with_capacity(rows);
        for g in grids {
            coords.extend(g.coords.iter().flatten());
            visible.extend_from_slice(&g.visible);
            noise.extend_from_slice(&g.noise_target);
            observed.extend_from_slice(&g.observed);
        }
        Ok(Self {
            batch: grids.len(),
            frames: first.frames,
            entities: first.entities(),
            players_per_team: first.players_per_team,
            coords: Array::new(vec![rows, 2], coords)?,
            visible: Arc::new(visible),
            noise_target: Arc::new(noise),
            observed: Arc::new(observed),
        })
    }

    pub fn rows(&self) -> usize {
        self.batch * self.frames * self.entities
    }
}
