//! The frame-dictionary text format.
//!
//! ```text
//! {
//!   "13590": {"ball": [6.50, 4.20], "team0": {"Player1": [-0.74, -30.28]}, "team1": {}},
//!   "13591": {"ball": [null, null], "team0": {"Player1": [-0.73, -30.41]}, "team1": {}}
//! }
//! ```
//!
//! Serialization is canonical: frames in index order, ids in lexical order,
//! two decimals, `[null, null]` for missing entities.

use std::fmt::{self, Write as _};

use serde::de::{self, DeserializeSeed, Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use super::clip::{Point, RawClip, RawFrame, Sport, TrajectoryClip};
use crate::error::{Error, Result};

/// Parses a clip, rejecting duplicate player ids within a frame.
pub fn parse_clip(text: &str, fps: f64, sport: Sport) -> Result<TrajectoryClip> {
    parse_raw_clip(text, fps, sport)?.into_clip()
}

/// Parses a clip while keeping duplicate detections for later resolution.
pub fn parse_raw_clip(text: &str, fps: f64, sport: Sport) -> Result<RawClip> {
    let mut de = serde_json::Deserializer::from_str(text);
    let mut frames = FramesSeed
        .deserialize(&mut de)
        .map_err(|e| Error::Parse(e.to_string()))?;
    de.end().map_err(|e| Error::Parse(e.to_string()))?;
    frames.sort_by_key(|f| f.index);
    if let Some(w) = frames.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(Error::Parse(format!("duplicate frame key {}", w[0].index)));
    }
    Ok(RawClip {
        frames,
        fps,
        players_per_team: sport.players_per_team(),
        sport,
        meta: Default::default(),
    })
}

pub fn serialize_clip(clip: &TrajectoryClip) -> String {
    let mut out = String::from("{\n");
    for (i, frame) in clip.frames.iter().enumerate() {
        let _ = write!(out, "  \"{}\": {{\"ball\": ", frame.index);
        write_point(&mut out, frame.ball);
        for side in 0..2 {
            let _ = write!(out, ", \"team{side}\": {{");
            for (j, (id, p)) in frame.team(side).iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(id).expect("string keys serialize"));
                out.push_str(": ");
                write_point(&mut out, *p);
            }
            out.push('}');
        }
        out.push('}');
        if i + 1 < clip.frames.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Rounds to the two-decimal grid of the file format.
pub fn round2(v: f64) -> f64 {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn write_point(out: &mut String, p: Option<Point>) {
    match p {
        Some([x, y]) => {
            let _ = write!(out, "[{:.2}, {:.2}]", round2(x), round2(y));
        }
        None => out.push_str("[null, null]"),
    }
}

fn parse_frame_key(key: &str) -> Option<i64> {
    if key.is_empty() || !key.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    key.parse().ok()
}

struct FramesSeed;

impl<'de> DeserializeSeed<'de> for FramesSeed {
    type Value = Vec<RawFrame>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for FramesSeed {
    type Value = Vec<RawFrame>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a map from frame index to frame object")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
        let mut frames = Vec::new();
        while let Some(key) = map.next_key::<String>()? {
            let index = parse_frame_key(&key)
                .ok_or_else(|| de::Error::custom(format!("malformed frame key {key:?}")))?;
            let mut frame = map.next_value_seed(FrameSeed)?;
            frame.index = index;
            frames.push(frame);
        }
        Ok(frames)
    }
}

struct FrameSeed;

impl<'de> DeserializeSeed<'de> for FrameSeed {
    type Value = RawFrame;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for FrameSeed {
    type Value = RawFrame;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a frame object with ball, team0 and team1")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
        let mut frame = RawFrame::default();
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "ball" => frame.ball = map.next_value::<Option<Coord>>()?.and_then(|c| c.0),
                "team0" => frame.team0 = map.next_value_seed(TeamSeed)?,
                "team1" => frame.team1 = map.next_value_seed(TeamSeed)?,
                other => return Err(de::Error::custom(format!("unknown frame field {other:?}"))),
            }
        }
        Ok(frame)
    }
}

/// Team objects are read as ordered pairs so duplicates survive parsing.
struct TeamSeed;

impl<'de> DeserializeSeed<'de> for TeamSeed {
    type Value = Vec<(String, Option<Point>)>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for TeamSeed {
    type Value = Vec<(String, Option<Point>)>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a map from player id to position")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
        let mut out = Vec::new();
        while let Some(id) = map.next_key::<String>()? {
            let pos = map.next_value::<Option<Coord>>()?.and_then(|c| c.0);
            out.push((id, pos));
        }
        Ok(out)
    }
}

struct Coord(Option<Point>);

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pair = <[Option<f64>; 2]>::deserialize(d)?;
        match pair {
            [Some(x), Some(y)] => Ok(Coord(Some([x, y]))),
            [None, None] => Ok(Coord(None)),
            _ => Err(de::Error::custom("coordinate pair must be both numbers or both null")),
        }
    }
}
