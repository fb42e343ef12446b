use rand::Rng;

use super::clip::{Frame, PitchSpec, Point, Sport, TrajectoryClip, BOUNDS_SLACK};
use super::track::Track;
use crate::error::{invalid, Result};

/// Fixed-slot trajectory block: `frames × (2N + 1)` entities ordered team0
/// slots, team1 slots, ball. Missing entities hold zeros and are invisible.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub fps: f64,
    pub players_per_team: usize,
    pub frames: usize,
    pub coords: Vec<Point>,
    pub visible: Vec<bool>,
}

impl Segment {
    pub fn empty(fps: f64, players_per_team: usize, frames: usize) -> Self {
        let n = frames * (2 * players_per_team + 1);
        Self {
            fps,
            players_per_team,
            frames,
            coords: vec![[0.0; 2]; n],
            visible: vec![false; n],
        }
    }

    pub fn entities(&self) -> usize {
        2 * self.players_per_team + 1
    }

    pub fn ball_slot(&self) -> usize {
        2 * self.players_per_team
    }

    pub fn team_slots(&self, side: usize) -> std::ops::Range<usize> {
        side * self.players_per_team..(side + 1) * self.players_per_team
    }

    pub fn idx(&self, t: usize, e: usize) -> usize {
        t * self.entities() + e
    }

    pub fn get(&self, t: usize, e: usize) -> Option<Point> {
        let i = self.idx(t, e);
        self.visible[i].then(|| self.coords[i])
    }

    pub fn set(&mut self, t: usize, e: usize, p: Option<Point>) {
        let i = self.idx(t, e);
        self.coords[i] = p.unwrap_or([0.0; 2]);
        self.visible[i] = p.is_some();
    }

    /// Slots follow the sorted rosters; index gaps become invisible frames.
    pub fn from_clip(clip: &TrajectoryClip) -> Self {
        Self::from_track(&Track::from_clip(clip))
    }

    pub fn from_track(track: &Track) -> Self {
        let n = track.players_per_team;
        let mut seg = Self::empty(track.fps, n, track.frames());
        let slots = (0..track.team0.len())
            .chain(n..n + track.team1.len())
            .chain(std::iter::once(2 * n));
        for (e, slot) in slots.enumerate() {
            for t in 0..seg.frames {
                seg.set(t, slot, track.series[e][t]);
            }
        }
        seg
    }

    /// Back to a clip. Slot `i` of a team takes `roster[i]` as its id; slots
    /// beyond the roster are named `slot<i>`. Invisible slots are written as
    /// missing.
    pub fn to_clip(&self, first_index: i64, rosters: [&[String]; 2], sport: Sport) -> Result<TrajectoryClip> {
        let n = self.players_per_team;
        let frames = (0..self.frames)
            .map(|t| {
                let mut f = Frame::new(first_index + t as i64);
                for (side, roster) in rosters.iter().enumerate() {
                    for i in 0..n {
                        let e = side * n + i;
                        let id = roster.get(i).cloned();
                        let p = self.get(t, e);
                        if id.is_none() && p.is_none() {
                            continue;
                        }
                        f.team_mut(side).insert(id.unwrap_or_else(|| format!("slot{i}")), p);
                    }
                }
                f.ball = self.get(t, 2 * n);
                f
            })
            .collect();
        TrajectoryClip::new(frames, self.fps, sport, n)
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.frames {
            return Err(invalid(format!(
                "slice {start}..{} exceeds {} frames",
                start + len,
                self.frames
            )));
        }
        let e = self.entities();
        Ok(Self {
            fps: self.fps,
            players_per_team: self.players_per_team,
            frames: len,
            coords: self.coords[start * e..(start + len) * e].to_vec(),
            visible: self.visible[start * e..(start + len) * e].to_vec(),
        })
    }

    /// Contiguous history and future segments starting at `start`.
    pub fn window(&self, start: usize, history: usize, future: usize) -> Result<(Self, Self)> {
        if start + history + future > self.frames {
            return Err(invalid(format!(
                "window needs {} frames from {start}, clip has {}",
                history + future,
                self.frames
            )));
        }
        Ok((self.slice(start, history)?, self.slice(start + history, future)?))
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.players_per_team != other.players_per_team {
            return Err(invalid("concatenating segments with different team sizes"));
        }
        let mut out = self.clone();
        out.frames += other.frames;
        out.coords.extend_from_slice(&other.coords);
        out.visible.extend_from_slice(&other.visible);
        Ok(out)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        let mut out = self.clone();
        for (c, &v) in out.coords.iter_mut().zip(&self.visible) {
            if v {
                *c = f(*c);
            }
        }
        out
    }

    /// Meters to `[-1, 1]²`.
    pub fn normalized(&self, pitch: &PitchSpec) -> Result<Self> {
        for (c, &v) in self.coords.iter().zip(&self.visible) {
            if v && !pitch.contains(*c, BOUNDS_SLACK) {
                return Err(invalid(format!("position {c:?} outside the pitch")));
            }
        }
        Ok(self.map_points(|p| normalize_point(p, pitch)))
    }

    pub fn denormalized(&self, pitch: &PitchSpec) -> Self {
        self.map_points(|p| denormalize_point(p, pitch))
    }

    /// Negates x and/or y for every entity and frame.
    pub fn flipped(&self, horizontal: bool, vertical: bool) -> Self {
        let sx = if horizontal { -1.0 } else { 1.0 };
        let sy = if vertical { -1.0 } else { 1.0 };
        self.map_points(|p| [sx * p[0], sy * p[1]])
    }
}

pub fn normalize_point(p: Point, pitch: &PitchSpec) -> Point {
    [2.0 * p[0] / pitch.length, 2.0 * p[1] / pitch.width]
}

pub fn denormalize_point(p: Point, pitch: &PitchSpec) -> Point {
    [p[0] * pitch.length / 2.0, p[1] * pitch.width / 2.0]
}

/// Draws one flip decision per axis and applies it to the whole sample.
pub fn flip_augment<R: Rng + ?Sized>(seg: &Segment, p_horizontal: f64, p_vertical: f64, rng: &mut R) -> Segment {
    let h = rng.random::<f64>() < p_horizontal;
    let v = rng.random::<f64>() < p_vertical;
    seg.flipped(h, v)
}

/// Start frames of sliding windows of `history + future` frames.
pub fn window_starts(len: usize, history: usize, future: usize, stride: usize) -> Vec<usize> {
    let need = history + future;
    if need > len || stride == 0 {
        return Vec::new();
    }
    (0..=len - need).step_by(stride).collect()
}
