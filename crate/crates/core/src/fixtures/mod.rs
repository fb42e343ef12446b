//! Synthetic clips for tests, demos and the acceptance experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ClipMeta, Frame, Point, Sport, TrajectoryClip};
use crate::error::{invalid, Result};
use crate::numeric::rng::standard_normal;
use crate::numeric::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub sport: Sport,
    pub fps: f64,
    pub frames: usize,
    /// Initial speeds are uniform on `[0, max_speed]` m/s.
    pub max_speed: f64,
    /// Standard deviation of the per-second velocity change (m/s per √s).
    pub velocity_noise: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            sport: Sport::Soccer,
            fps: 5.0,
            frames: 15,
            max_speed: 4.0,
            velocity_noise: 0.0,
        }
    }
}

fn roster(side: usize, n: usize) -> Vec<String> {
    let prefix = if side == 0 { "h" } else { "a" };
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

/// Builds a clip from `paths[entity][frame]`, entities ordered team0,
/// team1, ball.
pub fn clip_from_paths(sport: Sport, fps: f64, paths: &[Vec<Point>], meta: ClipMeta) -> Result<TrajectoryClip> {
    let n = sport.players_per_team();
    if paths.len() != 2 * n + 1 {
        return Err(invalid(format!("{} paths for {} entities", paths.len(), 2 * n + 1)));
    }
    let frames = paths[0].len();
    let rosters = [roster(0, n), roster(1, n)];
    let fs = (0..frames)
        .map(|t| {
            let mut f = Frame::new(t as i64);
            for side in 0..2 {
                for (i, id) in rosters[side].iter().enumerate() {
                    f.team_mut(side).insert(id.clone(), Some(paths[side * n + i][t]));
                }
            }
            f.ball = Some(paths[2 * n][t]);
            f
        })
        .collect();
    Ok(TrajectoryClip::new(fs, fps, sport, n)?.with_meta(meta))
}

fn uniform_in(rng: &mut ChaCha8Rng, half_x: f64, half_y: f64) -> Point {
    [rng.random_range(-half_x..=half_x), rng.random_range(-half_y..=half_y)]
}

/// Entities that start at random and keep their velocity, up to an optional
/// random-walk perturbation of the velocity. Start positions leave room so
/// nobody leaves the pitch.
pub fn constant_velocity_clip(p: &MotionParams, rng: &mut ChaCha8Rng) -> Result<TrajectoryClip> {
    let pitch = p.sport.pitch();
    let duration = p.frames as f64 / p.fps;
    let reach = p.max_speed * duration + 3.0 * p.velocity_noise * duration.powf(1.5) + 1.0;
    let (hx, hy) = (pitch.half_length() - reach, pitch.half_width() - reach);
    if hx <= 0.0 || hy <= 0.0 {
        return Err(invalid("clip too long or too fast for the pitch"));
    }
    let dt = 1.0 / p.fps;
    let entities = 2 * p.sport.players_per_team() + 1;
    let paths: Vec<Vec<Point>> = (0..entities)
        .map(|_| {
            let mut x = uniform_in(rng, hx, hy);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let speed = rng.random_range(0.0..=p.max_speed);
            let mut v = [speed * angle.cos(), speed * angle.sin()];
            (0..p.frames)
                .map(|_| {
                    let here = x;
                    x = [x[0] + v[0] * dt, x[1] + v[1] * dt];
                    let s = p.velocity_noise * dt.sqrt();
                    v = [v[0] + s * standard_normal(rng), v[1] + s * standard_normal(rng)];
                    here
                })
                .collect()
        })
        .collect();
    clip_from_paths(p.sport, p.fps, &paths, ClipMeta::default())
}

pub fn constant_velocity_clips(p: &MotionParams, count: usize, seed: u64) -> Result<Vec<TrajectoryClip>> {
    let root = RngStream::new(seed).fork("constant_velocity");
    (0..count)
        .map(|i| {
            let c = constant_velocity_clip(p, &mut root.child(i as u64).rng())?;
            Ok(c.with_meta(ClipMeta {
                id: Some(format!("cv{i:05}")),
                ..Default::default()
            }))
        })
        .collect()
}

/// Every entity runs on its own circle at a constant angular speed.
pub fn circular_clips(p: &MotionParams, count: usize, seed: u64) -> Result<Vec<TrajectoryClip>> {
    let root = RngStream::new(seed).fork("circular");
    let pitch = p.sport.pitch();
    let entities = 2 * p.sport.players_per_team() + 1;
    (0..count)
        .map(|i| {
            let mut rng = root.child(i as u64).rng();
            let paths: Vec<Vec<Point>> = (0..entities)
                .map(|_| {
                    let r = rng.random_range(2.0..8.0);
                    let c = uniform_in(&mut rng, pitch.half_length() - r - 1.0, pitch.half_width() - r - 1.0);
                    let omega = rng.random_range(0.2..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    (0..p.frames)
                        .map(|t| {
                            let a = phase + omega * t as f64 / p.fps;
                            [c[0] + r * a.cos(), c[1] + r * a.sin()]
                        })
                        .collect()
                })
                .collect();
            clip_from_paths(
                p.sport,
                p.fps,
                &paths,
                ClipMeta {
                    id: Some(format!("circle{i:05}")),
                    ..Default::default()
                },
            )
        })
        .collect()
}

/// League tags and formation scales of the two-style fixture.
pub const LEAGUES: [(&str, f64); 2] = [("tight", 4.0), ("spread", 14.0)];

/// Teams drift as a block while players hold formation slots around the
/// team centre. The slot layout is scaled by the league's spread, so the
/// two leagues differ in stretch index.
pub fn two_style_clips(p: &MotionParams, per_league: usize, seed: u64) -> Result<Vec<TrajectoryClip>> {
    let root = RngStream::new(seed).fork("two_style");
    let pitch = p.sport.pitch();
    let n = p.sport.players_per_team();
    let mut out = Vec::with_capacity(2 * per_league);
    for (li, (league, spread)) in LEAGUES.iter().enumerate() {
        for i in 0..per_league {
            let mut rng = root.child((li * per_league + i) as u64).rng();
            let duration = p.frames as f64 / p.fps;
            let margin = spread * 1.5 + p.max_speed * duration + 1.0;
            let mut paths: Vec<Vec<Point>> = Vec::with_capacity(2 * n + 1);
            for _side in 0..2 {
                let centre = uniform_in(&mut rng, pitch.half_length() - margin, pitch.half_width() - margin);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let speed = rng.random_range(0.0..=p.max_speed);
                let v = [speed * angle.cos(), speed * angle.sin()];
                for _ in 0..n {
                    let slot = [rng.random_range(-1.0..1.0) * spread, rng.random_range(-1.0..1.0) * spread * 0.7];
                    let wobble = rng.random_range(0.0..std::f64::consts::TAU);
                    paths.push(
                        (0..p.frames)
                            .map(|t| {
                                let s = t as f64 / p.fps;
                                let jitter = 0.3 * (wobble + 1.5 * s).sin();
                                [centre[0] + slot[0] + v[0] * s + jitter, centre[1] + slot[1] + v[1] * s]
                            })
                            .collect(),
                    );
                }
            }
            let c0 = paths[0][0];
            let c1 = paths[n][0];
            let ball_start = [(c0[0] + c1[0]) / 2.0, (c0[1] + c1[1]) / 2.0];
            paths.push(vec![ball_start; p.frames]);
            out.push(clip_from_paths(
                p.sport,
                p.fps,
                &paths,
                ClipMeta {
                    id: Some(format!("{league}{i:05}")),
                    league: Some((*league).into()),
                    ..Default::default()
                },
            )?);
        }
    }
    Ok(out)
}

/// Subtypes of the separable event fixture, one per type family.
pub const EVENT_CLASSES: [&str; 3] = ["build", "progression", "goal"];

/// Three visually separable event classes: a static spread shape
/// (`build`), every player advancing toward `+x` (`progression`) and every
/// player converging on the ball inside the penalty box (`goal`).
pub fn event_clips(p: &MotionParams, per_class: usize, seed: u64) -> Result<Vec<TrajectoryClip>> {
    let root = RngStream::new(seed).fork("events");
    let pitch = p.sport.pitch();
    let n = p.sport.players_per_team();
    let duration = p.frames as f64 / p.fps;
    let mut out = Vec::with_capacity(3 * per_class);
    for i in 0..per_class {
        for (ci, class) in EVENT_CLASSES.iter().enumerate() {
            let mut rng = root.child((i * 3 + ci) as u64).rng();
            let ball = match ci {
                2 => {
                    let (sx, sy) = (pitch.half_length() / 52.5, pitch.half_width() / 34.0);
                    [pitch.half_length() - rng.random_range(5.0..14.0) * sx, rng.random_range(-12.0..12.0) * sy]
                }
                _ => uniform_in(&mut rng, pitch.half_length() * 0.5, pitch.half_width() * 0.6),
            };
            let mut paths: Vec<Vec<Point>> = (0..2 * n)
                .map(|_| {
                    let start = uniform_in(&mut rng, pitch.half_length() - 8.0, pitch.half_width() - 2.0);
                    let jitter = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
                    let speed = rng.random_range(3.0..6.0);
                    (0..p.frames)
                        .map(|t| {
                            let s = t as f64 / p.fps;
                            let q = match ci {
                                0 => [start[0] + jitter[0] * s, start[1] + jitter[1] * s],
                                1 => [start[0] + speed * s * 0.8 - 0.4 * speed * duration, start[1] + jitter[1] * s],
                                _ => {
                                    let f = (s / duration).min(1.0) * 0.8;
                                    [start[0] + (ball[0] - start[0]) * f, start[1] + (ball[1] - start[1]) * f]
                                }
                            };
                            [
                                q[0].clamp(-pitch.half_length(), pitch.half_length()),
                                q[1].clamp(-pitch.half_width(), pitch.half_width()),
                            ]
                        })
                        .collect()
                })
                .collect();
            paths.push(vec![ball; p.frames]);
            out.push(clip_from_paths(
                p.sport,
                p.fps,
                &paths,
                ClipMeta {
                    id: Some(format!("{class}{i:05}")),
                    event: Some((*class).into()),
                    ..Default::default()
                },
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Segment;
    use crate::metrics::structure;

    #[test]
    fn constant_velocity_is_linear_and_in_bounds() {
        let p = MotionParams::default();
        let clips = constant_velocity_clips(&p, 20, 1).unwrap();
        assert_eq!(clips, constant_velocity_clips(&p, 20, 1).unwrap());
        for c in &clips {
            assert_eq!(c.out_of_bounds(&c.sport.pitch()), None);
            let s = Segment::from_clip(c);
            for e in 0..23 {
                let a = s.get(0, e).unwrap();
                let b = s.get(1, e).unwrap();
                let z = s.get(14, e).unwrap();
                assert!((z[0] - (a[0] + 14.0 * (b[0] - a[0]))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn circles_keep_radius() {
        let p = MotionParams {
            frames: 30,
            ..Default::default()
        };
        for c in circular_clips(&p, 5, 2).unwrap() {
            assert_eq!(c.out_of_bounds(&c.sport.pitch()), None);
        }
    }

    #[test]
    fn leagues_differ_in_stretch() {
        let clips = two_style_clips(&MotionParams::default(), 10, 3).unwrap();
        let mean_si = |league: &str| {
            let v: Vec<f64> = clips
                .iter()
                .filter(|c| c.meta.league.as_deref() == Some(league))
                .map(|c| {
                    let s = Segment::from_clip(c);
                    let pts: Vec<_> = s.team_slots(0).filter_map(|e| s.get(0, e)).collect();
                    structure(&pts, None, &[]).unwrap().stretch_index
                })
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_si("spread") > 2.0 * mean_si("tight"));
        assert!(clips.iter().all(|c| c.out_of_bounds(&c.sport.pitch()).is_none()));
    }

    #[test]
    fn event_fixture_labels() {
        let clips = event_clips(&MotionParams::default(), 4, 5).unwrap();
        assert_eq!(clips.len(), 12);
        for c in &clips {
            assert!(EVENT_CLASSES.contains(&c.meta.event.as_deref().unwrap()));
            assert_eq!(c.out_of_bounds(&c.sport.pitch()), None);
        }
    }
}
