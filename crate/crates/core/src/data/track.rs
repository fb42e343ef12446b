//! Dense entity-major view of a clip, the working form for resampling and
//! refinement.

use super::clip::{ClipMeta, Frame, Point, RawClip, Sport, TrajectoryClip};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub fps: f64,
    pub first_index: i64,
    pub sport: Sport,
    pub players_per_team: usize,
    pub meta: ClipMeta,
    pub team0: Vec<String>,
    pub team1: Vec<String>,
    /// `series[e][t]`, entities ordered team0 roster, team1 roster, ball.
    pub series: Vec<Vec<Option<Point>>>,
}

impl Track {
    pub fn frames(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    pub fn ball(&self) -> usize {
        self.team0.len() + self.team1.len()
    }

    pub fn is_player(&self, e: usize) -> bool {
        e < self.ball()
    }

    /// Builds a track on the contiguous index range of the clip; indices
    /// absent from the clip become all-missing frames.
    pub fn from_clip(clip: &TrajectoryClip) -> Self {
        let team0 = clip.roster(0);
        let team1 = clip.roster(1);
        let first_index = clip.frames.first().map_or(0, |f| f.index);
        let len = clip.frames.last().map_or(0, |f| (f.index - first_index + 1) as usize);
        let mut series = vec![vec![None; len]; team0.len() + team1.len() + 1];
        for f in &clip.frames {
            let t = (f.index - first_index) as usize;
            for (e, id) in team0.iter().enumerate() {
                series[e][t] = f.team0.get(id).copied().flatten();
            }
            for (e, id) in team1.iter().enumerate() {
                series[team0.len() + e][t] = f.team1.get(id).copied().flatten();
            }
            series[team0.len() + team1.len()][t] = f.ball;
        }
        Self {
            fps: clip.fps,
            first_index,
            sport: clip.sport,
            players_per_team: clip.players_per_team,
            meta: clip.meta.clone(),
            team0,
            team1,
            series,
        }
    }

    /// Like [`Track::from_clip`], resolving duplicate detections by keeping
    /// the one nearest the id's last known position, ties broken by the
    /// lower coordinate sum and then lexically.
    pub fn from_raw(raw: &RawClip) -> Result<Self> {
        for w in raw.frames.windows(2) {
            if w[1].index <= w[0].index {
                return Err(invalid("raw frame indices must increase"));
            }
        }
        let mut last: [std::collections::BTreeMap<String, Point>; 2] = Default::default();
        let mut frames = Vec::with_capacity(raw.frames.len());
        for rf in &raw.frames {
            let mut frame = Frame::new(rf.index);
            frame.ball = rf.ball;
            for side in 0..2 {
                let mut chosen: std::collections::BTreeMap<&str, Option<Point>> = Default::default();
                for (id, pos) in rf.team(side) {
                    let slot = chosen.entry(id.as_str()).or_insert(*pos);
                    *slot = pick(*slot, *pos, last[side].get(id).copied());
                }
                for (id, pos) in chosen {
                    if let Some(p) = pos {
                        last[side].insert(id.to_string(), p);
                    }
                    frame.team_mut(side).insert(id.to_string(), pos);
                }
            }
            frames.push(frame);
        }
        let clip = TrajectoryClip::new(frames, raw.fps, raw.sport, raw.players_per_team)?.with_meta(raw.meta.clone());
        Ok(Self::from_clip(&clip))
    }

    pub fn to_clip(&self) -> TrajectoryClip {
        let nb = self.ball();
        let frames = (0..self.frames())
            .map(|t| {
                let mut f = Frame::new(self.first_index + t as i64);
                for (e, id) in self.team0.iter().enumerate() {
                    f.team0.insert(id.clone(), self.series[e][t]);
                }
                for (e, id) in self.team1.iter().enumerate() {
                    f.team1.insert(id.clone(), self.series[self.team0.len() + e][t]);
                }
                f.ball = self.series[nb][t];
                f
            })
            .collect();
        TrajectoryClip {
            frames,
            fps: self.fps,
            players_per_team: self.players_per_team,
            sport: self.sport,
            meta: self.meta.clone(),
        }
    }
}

fn pick(a: Option<Point>, b: Option<Point>, anchor: Option<Point>) -> Option<Point> {
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => return Some(a),
        (None, other) => return other,
    };
    let key = |p: Point| {
        let d = anchor.map_or(0.0, |q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        (d, p[0] + p[1], p[0], p[1])
    };
    let (ka, kb) = (key(a), key(b));
    if ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Greater) {
        Some(b)
    } else {
        Some(a)
    }
}
