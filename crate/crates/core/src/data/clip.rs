use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Pitch coordinates in meters, origin at the center spot.
pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sport {
    Soccer,
    Basketball,
    AmericanFootball,
    IceHockey,
}

impl Sport {
    pub fn players_per_team(self) -> usize {
        match self {
            Sport::Soccer | Sport::AmericanFootball => 11,
            Sport::Basketball => 5,
            Sport::IceHockey => 6,
        }
    }

    pub fn pitch(self) -> PitchSpec {
        match self {
            Sport::Soccer => PitchSpec { length: 105.0, width: 68.0 },
            Sport::Basketball => PitchSpec { length: 28.0, width: 15.0 },
            Sport::AmericanFootball => PitchSpec { length: 109.73, width: 48.77 },
            Sport::IceHockey => PitchSpec { length: 61.0, width: 26.0 },
        }
    }

    /// Frame rate the curated datasets are stored at.
    pub fn native_fps(self) -> f64 {
        match self {
            Sport::Soccer => 25.0,
            Sport::Basketball => 5.0,
            Sport::AmericanFootball => 10.0,
            Sport::IceHockey => 30.0,
        }
    }
}

impl fmt::Display for Sport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sport::Soccer => "soccer",
            Sport::Basketball => "basketball",
            Sport::AmericanFootball => "american_football",
            Sport::IceHockey => "ice_hockey",
        })
    }
}

impl FromStr for Sport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soccer" => Ok(Sport::Soccer),
            "basketball" => Ok(Sport::Basketball),
            "american_football" => Ok(Sport::AmericanFootball),
            "ice_hockey" => Ok(Sport::IceHockey),
            other => Err(invalid(format!("unknown sport {other:?}"))),
        }
    }
}

/// Playing-surface dimensions in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PitchSpec {
    pub length: f64,
    pub width: f64,
}

/// Allowed excursion beyond the touchlines.
pub const BOUNDS_SLACK: f64 = 0.5;

impl PitchSpec {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(length > 0.0 && width > 0.0) {
            return Err(invalid(format!("pitch dimensions must be positive, got {length} x {width}")));
        }
        Ok(Self { length, width })
    }

    pub fn soccer() -> Self {
        Sport::Soccer.pitch()
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p[0].abs() <= self.half_length() + slack && p[1].abs() <= self.half_width() + slack
    }
}

/// Optional tags used to select conditioning subsets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub league: Option<String>,
    /// Event subtype label attached to the clip, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Frame {
    pub index: i64,
    pub ball: Option<Point>,
    pub team0: BTreeMap<String, Option<Point>>,
    pub team1: BTreeMap<String, Option<Point>>,
}

impl Frame {
    pub fn new(index: i64) -> Self {
        Self {
            index,
            ..Self::default()
        }
    }

    pub fn team(&self, side: usize) -> &BTreeMap<String, Option<Point>> {
        if side == 0 {
            &self.team0
        } else {
            &self.team1
        }
    }

    pub fn team_mut(&mut self, side: usize) -> &mut BTreeMap<String, Option<Point>> {
        if side == 0 {
            &mut self.team0
        } else {
            &mut self.team1
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.ball
            .iter()
            .copied()
            .chain(self.team0.values().flatten().copied())
            .chain(self.team1.values().flatten().copied())
    }
}

/// Frame-indexed positions of both teams and the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryClip {
    pub frames: Vec<Frame>,
    pub fps: f64,
    pub players_per_team: usize,
    pub sport: Sport,
    pub meta: ClipMeta,
}

impl TrajectoryClip {
    /// Validates frame indices (non-negative, increasing) and roster sizes.
    pub fn new(frames: Vec<Frame>, fps: f64, sport: Sport, players_per_team: usize) -> Result<Self> {
        if !(fps > 0.0) {
            return Err(invalid(format!("fps must be positive, got {fps}")));
        }
        if let Some(f) = frames.first().filter(|f| f.index < 0) {
            return Err(invalid(format!("frame indices must be non-negative, got {}", f.index)));
        }
        for pair in frames.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(invalid(format!(
                    "frame indices must increase: {} then {}",
                    pair[0].index, pair[1].index
                )));
            }
        }
        let clip = Self {
            frames,
            fps,
            players_per_team,
            sport,
            meta: ClipMeta::default(),
        };
        for side in 0..2 {
            let n = clip.roster(side).len();
            if n > players_per_team {
                return Err(invalid(format!(
                    "team{side} roster has {n} players, more than {players_per_team}"
                )));
            }
        }
        Ok(clip)
    }

    pub fn with_meta(mut self, meta: ClipMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Sorted union of player ids seen for a team.
    pub fn roster(&self, side: usize) -> Vec<String> {
        let ids: BTreeSet<&String> = self.frames.iter().flat_map(|f| f.team(side).keys()).collect();
        ids.into_iter().cloned().collect()
    }

    pub fn is_contiguous(&self) -> bool {
        self.frames.windows(2).all(|p| p[1].index == p[0].index + 1)
    }

    pub fn pitch(&self) -> PitchSpec {
        self.sport.pitch()
    }

    /// First position outside the pitch plus slack, if any.
    pub fn out_of_bounds(&self, pitch: &PitchSpec) -> Option<(i64, Point)> {
        self.frames.iter().find_map(|f| {
            f.positions()
                .find(|&p| !pitch.contains(p, BOUNDS_SLACK))
                .map(|p| (f.index, p))
        })
    }
}

/// A parsed clip that may still carry several detections per player id
/// within one frame (the input of duplicate resolution).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawFrame {
    pub index: i64,
    pub ball: Option<Point>,
    pub team0: Vec<(String, Option<Point>)>,
    pub team1: Vec<(String, Option<Point>)>,
}

impl RawFrame {
    pub fn team(&self, side: usize) -> &[(String, Option<Point>)] {
        if side == 0 {
            &self.team0
        } else {
            &self.team1
        }
    }

    pub fn has_duplicates(&self) -> Option<(usize, &str)> {
        for side in 0..2 {
            let mut seen = BTreeSet::new();
            for (id, _) in self.team(side) {
                if !seen.insert(id.as_str()) {
                    return Some((side, id.as_str()));
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawClip {
    pub frames: Vec<RawFrame>,
    pub fps: f64,
    pub players_per_team: usize,
    pub sport: Sport,
    pub meta: ClipMeta,
}

impl From<&TrajectoryClip> for RawClip {
    fn from(clip: &TrajectoryClip) -> Self {
        let frames = clip
            .frames
            .iter()
            .map(|f| RawFrame {
                index: f.index,
                ball: f.ball,
                team0: f.team0.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                team1: f.team1.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            })
            .collect();
        Self {
            frames,
            fps: clip.fps,
            players_per_team: clip.players_per_team,
            sport: clip.sport,
            meta: clip.meta.clone(),
        }
    }
}

impl RawClip {
    /// Converts to a clip, rejecting duplicate ids within a frame.
    pub fn into_clip(self) -> Result<TrajectoryClip> {
        let mut frames = Vec::with_capacity(self.frames.len());
        for rf in self.frames {
            if let Some((side, id)) = rf.has_duplicates() {
                return Err(Error::Parse(format!(
                    "frame {}: duplicate player id {id:?} in team{side}",
                    rf.index
                )));
            }
            frames.push(Frame {
                index: rf.index,
                ball: rf.ball,
                team0: rf.team0.into_iter().collect(),
                team1: rf.team1.into_iter().collect(),
            });
        }
        Ok(TrajectoryClip::new(frames, self.fps, self.sport, self.players_per_team)?.with_meta(self.meta))
    }
}
