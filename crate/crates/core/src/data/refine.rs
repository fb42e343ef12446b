//! Trajectory refinement: duplicate resolution, gap filling, anomaly repair
//! and bidirectional EMA smoothing, applied in that order.

use serde::{Deserialize, Serialize};

use super::clip::{Point, RawClip, TrajectoryClip};
use super::track::Track;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Longest run of missing frames that is interpolated.
    pub max_gap: usize,
    /// Speed limit in m/s above which a player step is implausible.
    pub v_max: f64,
    /// Number of implausible players that makes a frame pair anomalous.
    pub anomaly_count: usize,
    /// EMA weight on the current sample.
    pub gamma: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            max_gap: 12,
            v_max: 12.0,
            anomaly_count: 3,
            gamma: 0.85,
        }
    }
}

pub fn refine(clip: &TrajectoryClip, params: &RefineParams) -> TrajectoryClip {
    refine_track(Track::from_clip(clip), params).to_clip()
}

/// Entry point for input that may still hold duplicate detections.
pub fn refine_raw(raw: &RawClip, params: &RefineParams) -> Result<TrajectoryClip> {
    Ok(refine_track(Track::from_raw(raw)?, params).to_clip())
}

pub fn refine_track(mut track: Track, params: &RefineParams) -> Track {
    for s in &mut track.series {
        fill_gaps(s, params.max_gap);
    }
    let frames = anomalous_frames(&track, params);
    repair_spans(&mut track, &frames, params.max_gap);
    for s in &mut track.series {
        smooth(s, params.gamma);
    }
    track
}

fn lerp(a: Point, b: Point, w: f64) -> Point {
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

/// Linear fill for interior gaps up to `max_gap`; gaps touching a clip
/// boundary hold the nearest observed value.
pub fn fill_gaps(s: &mut [Option<Point>], max_gap: usize) {
    let n = s.len();
    let mut t = 0;
    while t < n {
        if s[t].is_some() {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && s[t].is_none() {
            t += 1;
        }
        let len = t - start;
        if len > max_gap {
            continue;
        }
        match (start.checked_sub(1).and_then(|i| s[i]), s.get(t).copied().flatten()) {
            (Some(a), Some(b)) => {
                for (j, slot) in s[start..t].iter_mut().enumerate() {
                    *slot = Some(lerp(a, b, (j + 1) as f64 / (len + 1) as f64));
                }
            }
            (Some(p), None) | (None, Some(p)) => s[start..t].fill(Some(p)),
            (None, None) => {}
        }
    }
}

/// Frames strictly inside runs of anomalous consecutive pairs.
pub fn anomalous_frames(track: &Track, params: &RefineParams) -> Vec<bool> {
    let n = track.frames();
    let step = params.v_max / track.fps;
    let pair_bad: Vec<bool> = (0..n.saturating_sub(1))
        .map(|t| {
            let fast = (0..track.ball())
                .filter(|&e| match (track.series[e][t], track.series[e][t + 1]) {
                    (Some(a), Some(b)) => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() > step,
                    _ => false,
                })
                .count();
            fast >= params.anomaly_count
        })
        .collect();
    let mut bad = vec![false; n];
    for t in 1..n.saturating_sub(1) {
        bad[t] = pair_bad[t - 1] && pair_bad[t];
    }
    bad
}

fn repair_spans(track: &mut Track, bad: &[bool], max_len: usize) {
    let n = bad.len();
    let mut t = 0;
    while t < n {
        if !bad[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && bad[t] {
            t += 1;
        }
        if t - start > max_len {
            continue;
        }
        for s in &mut track.series {
            let before = s[..start].iter().rposition(Option::is_some);
            let after = s[t..].iter().position(Option::is_some).map(|i| i + t);
            for j in start..t {
                s[j] = match (before, after) {
                    (Some(a), Some(b)) => {
                        Some(lerp(s[a].unwrap(), s[b].unwrap(), (j - a) as f64 / (b - a) as f64))
                    }
                    (Some(a), None) => s[a],
                    (None, Some(b)) => s[b],
                    (None, None) => None,
                };
            }
        }
    }
}

/// Forward and backward EMA averaged, per contiguous observed run. Each pass
/// starts at its steady-state lag so that linear motion is a fixed point.
pub fn smooth(s: &mut [Option<Point>], gamma: f64) {
    let n = s.len();
    let mut t = 0;
    while t < n {
        if s[t].is_none() {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && s[t].is_some() {
            t += 1;
        }
        let run: Vec<Point> = s[start..t].iter().map(|p| p.unwrap()).collect();
        for (slot, p) in s[start..t].iter_mut().zip(ema_bidirectional(&run, gamma)) {
            *slot = Some(p);
        }
    }
}

fn ema_bidirectional(x: &[Point], gamma: f64) -> Vec<Point> {
    let n = x.len();
    if n < 2 || gamma >= 1.0 {
        return x.to_vec();
    }
    let mut fwd = vec![[0.0; 2]; n];
    let mut bwd = vec![[0.0; 2]; n];
    for k in 0..2 {
        let mut f = x[0][k] - (x[1][k] - x[0][k]) / gamma;
        for t in 0..n {
            f = gamma * x[t][k] + (1.0 - gamma) * f;
            fwd[t][k] = f;
        }
        let mut b = x[n - 1][k] + (x[n - 1][k] - x[n - 2][k]) / gamma;
        for t in (0..n).rev() {
            b = gamma * x[t][k] + (1.0 - gamma) * b;
            bwd[t][k] = b;
        }
    }
    fwd.iter().zip(&bwd).map(|(f, b)| [(f[0] + b[0]) / 2.0, (f[1] + b[1]) / 2.0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::clip::{Frame, Sport};

    fn cv_clip(frames: usize, players: usize) -> TrajectoryClip {
        let fs = (0..frames)
            .map(|t| {
                let mut f = Frame::new(t as i64);
                for p in 0..players {
                    let x = -40.0 + 6.0 * p as f64 + 0.2 * t as f64;
                    let y = -20.0 + 3.0 * p as f64 - 0.1 * t as f64;
                    f.team_mut(p % 2).insert(format!("P{p}"), Some([x, y]));
                }
                f.ball = Some([0.3 * t as f64, 0.0]);
                f
            })
            .collect();
        TrajectoryClip::new(fs, 25.0, Sport::Soccer, 11).unwrap()
    }

    fn max_diff(a: &TrajectoryClip, b: &TrajectoryClip) -> f64 {
        let mut m: f64 = 0.0;
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (pa, pb) in fa.positions().zip(fb.positions()) {
                m = m.max((pa[0] - pb[0]).abs()).max((pa[1] - pb[1]).abs());
            }
        }
        m
    }

    fn max_player_speed(clip: &TrajectoryClip) -> f64 {
        let track = Track::from_clip(clip);
        let mut m: f64 = 0.0;
        for e in 0..track.ball() {
            for t in 1..track.frames() {
                if let (Some(a), Some(b)) = (track.series[e][t - 1], track.series[e][t]) {
                    m = m.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() * clip.fps);
                }
            }
        }
        m
    }

    #[test]
    fn constant_velocity_is_unchanged() {
        let clip = cv_clip(30, 10);
        for gamma in [0.3, 0.85, 0.999999] {
            let params = RefineParams { gamma, ..Default::default() };
            assert!(max_diff(&refine(&clip, &params), &clip) < 1e-9);
        }
    }

    #[test]
    fn short_gap_filled_collinear() {
        let mut clip = cv_clip(20, 4);
        for t in 8..11 {
            clip.frames[t].team0.insert("P0".into(), None);
        }
        let out = refine(&clip, &RefineParams::default());
        let want = cv_clip(20, 4);
        assert!(max_diff(&out, &want) < 1e-9);
    }

    #[test]
    fn long_gap_left_missing() {
        let mut s: Vec<Option<Point>> = (0..30).map(|t| Some([t as f64, 0.0])).collect();
        for slot in &mut s[5..20] {
            *slot = None;
        }
        fill_gaps(&mut s, 12);
        assert!(s[5..20].iter().all(Option::is_none));
    }

    #[test]
    fn boundary_gap_holds_nearest() {
        let mut s = vec![None, None, Some([1.0, 2.0]), Some([2.0, 2.0]), None];
        fill_gaps(&mut s, 12);
        assert_eq!(s[0], Some([1.0, 2.0]));
        assert_eq!(s[4], Some([2.0, 2.0]));
    }

    #[test]
    fn teleport_is_reconstructed() {
        let clean = cv_clip(40, 10);
        let mut clip = clean.clone();
        for p in 0..5 {
            let id = format!("P{p}");
            let side = p % 2;
            let pos = clip.frames[20].team(side)[&id].unwrap();
            clip.frames[20].team_mut(side).insert(id, Some([pos[0] + 30.0, pos[1]]));
        }
        assert!(max_player_speed(&clip) > 12.0);
        let params = RefineParams::default();
        let bad = anomalous_frames(&Track::from_clip(&clip), &params);
        assert_eq!(bad.iter().filter(|b| **b).count(), 1);
        assert!(bad[20]);
        let out = refine(&clip, &params);
        assert!(max_player_speed(&out) <= params.v_max);
        assert!(max_diff(&out, &clean) < 1e-9);
    }

    #[test]
    fn refine_is_idempotent_on_linear_motion() {
        let mut clip = cv_clip(30, 6);
        clip.frames[12].ball = None;
        let p = RefineParams::default();
        let once = refine(&clip, &p);
        let twice = refine(&once, &p);
        assert!(max_diff(&once, &twice) < 1e-9);
    }

    #[test]
    fn duplicates_resolved_before_smoothing() {
        let clip = cv_clip(5, 2);
        let mut raw = RawClip::from(&clip);
        raw.frames[3].team0.push(("P0".into(), Some([40.0, 30.0])));
        let out = refine_raw(&raw, &RefineParams::default()).unwrap();
        assert!(max_diff(&out, &clip) < 1e-9);
    }
}
