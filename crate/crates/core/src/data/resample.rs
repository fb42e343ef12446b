use super::clip::{Frame, Point, TrajectoryClip};
use crate::error::{invalid, Result};

const TIME_EPS: f64 = 1e-9;

/// Linear temporal resampling onto a `target_fps` grid anchored at the first
/// source frame. The grid stops at the last instant inside the source span.
pub fn resample(clip: &TrajectoryClip, target_fps: f64) -> Result<TrajectoryClip> {
    if clip.len() < 2 {
        return Err(invalid(format!("resample needs at least 2 frames, got {}", clip.len())));
    }
    if !(target_fps > 0.0 && target_fps.is_finite()) {
        return Err(invalid(format!("target fps must be positive, got {target_fps}")));
    }
    let i0 = clip.frames[0].index;
    let times: Vec<f64> = clip
        .frames
        .iter()
        .map(|f| (f.index - i0) as f64 / clip.fps)
        .collect();
    let span = *times.last().unwrap();
    let count = (span * target_fps + TIME_EPS).floor() as usize + 1;
    let out_i0 = (i0 as f64 * target_fps / clip.fps).round() as i64;
    let rosters = [clip.roster(0), clip.roster(1)];

    let mut frames = Vec::with_capacity(count);
    let mut hi = 1;
    for k in 0..count {
        let t = k as f64 / target_fps;
        while hi < times.len() - 1 && times[hi] < t - TIME_EPS {
            hi += 1;
        }
        let lo = hi - 1;
        let mut f = Frame::new(out_i0 + k as i64);
        let (a, b) = (&clip.frames[lo], &clip.frames[hi]);
        let sample = |pa: Option<Point>, pb: Option<Point>| -> Option<Point> {
            if (t - times[lo]).abs() <= TIME_EPS {
                pa
            } else if (t - times[hi]).abs() <= TIME_EPS {
                pb
            } else {
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                match (pa, pb) {
                    (Some(p), Some(q)) => Some([p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]),
                    _ => None,
                }
            }
        };
        f.ball = sample(a.ball, b.ball);
        for side in 0..2 {
            for id in &rosters[side] {
                let pa = a.team(side).get(id).copied().flatten();
                let pb = b.team(side).get(id).copied().flatten();
                f.team_mut(side).insert(id.clone(), sample(pa, pb));
            }
        }
        frames.push(f);
    }
    Ok(TrajectoryClip::new(frames, target_fps, clip.sport, clip.players_per_team)?.with_meta(clip.meta.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::clip::Sport;
    use crate::numeric::RngStream;
    use rand::Rng;

    fn clip_from(points: &[Option<Point>], fps: f64) -> TrajectoryClip {
        let frames = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut f = Frame::new(i as i64);
                f.team0.insert("P".into(), *p);
                f.ball = *p;
                f
            })
            .collect();
        TrajectoryClip::new(frames, fps, Sport::Soccer, 11).unwrap()
    }

    #[test]
    fn upsampling_linear_motion_gives_midpoints() {
        let pts: Vec<_> = (0..5).map(|i| Some([i as f64 * 2.0, -(i as f64)])).collect();
        let out = resample(&clip_from(&pts, 12.5), 25.0).unwrap();
        assert_eq!(out.len(), 9);
        for (k, f) in out.frames.iter().enumerate() {
            let p = f.team0["P"].unwrap();
            assert!((p[0] - k as f64).abs() < 1e-12);
            assert!((p[1] + k as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_fps_is_identity() {
        let pts: Vec<_> = (0..6).map(|i| Some([i as f64 * 0.37, 1.0])).collect();
        let clip = clip_from(&pts, 25.0);
        assert_eq!(resample(&clip, 25.0).unwrap(), clip);
    }

    #[test]
    fn single_frame_is_an_error() {
        assert!(resample(&clip_from(&[Some([0.0, 0.0])], 10.0), 25.0).is_err());
    }

    #[test]
    fn missing_bracket_propagates() {
        let pts = [Some([0.0, 0.0]), None, Some([2.0, 0.0])];
        let out = resample(&clip_from(&pts, 10.0), 20.0).unwrap();
        let got: Vec<_> = out.frames.iter().map(|f| f.ball).collect();
        assert_eq!(got, vec![Some([0.0, 0.0]), None, None, None, Some([2.0, 0.0])]);
    }

    #[test]
    fn random_walk_matches_closed_form() {
        let mut rng = RngStream::new(11).rng();
        let mut p = [0.0f64, 0.0];
        let pts: Vec<_> = (0..40)
            .map(|_| {
                p[0] += rng.random_range(-1.0..1.0);
                p[1] += rng.random_range(-1.0..1.0);
                Some(p)
            })
            .collect();
        let out = resample(&clip_from(&pts, 10.0), 25.0).unwrap();
        for (k, f) in out.frames.iter().enumerate() {
            // Closed form: source position s = k * 10 / 25.
            let s = k as f64 * 0.4;
            let lo = s.floor() as usize;
            let w = s - lo as f64;
            let a = pts[lo].unwrap();
            let b = pts[(lo + 1).min(pts.len() - 1)].unwrap();
            let want = [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];
            let got = f.ball.unwrap();
            assert!((got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9);
        }
        assert_eq!(out.len(), 98);
        assert_eq!(out.frames[0].ball, pts[0]);
    }
}
