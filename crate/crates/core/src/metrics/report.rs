use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::displacement::aggregate_over_k;
use super::pitch_control::{
    control_map, defensive_disruption, depth_threat, dominant_region, obet, width_threat, ControlGrid, ControlRule,
    Kinematics, Mover,
};
use super::structure::{convex_hull, polygon_area, structure_deviation};
use crate::data::{Point, Segment};
use crate::error::{invalid, Result};

pub const TRAJECTORY_COLUMNS: [&str; 9] = ["ADE", "FDE", "dSI", "dSA", "dTW", "dTL", "dFN", "dCD", "dSO"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub horizon_frames: usize,
    pub horizon_seconds: f64,
    /// `min` or `avg` over the K samples.
    pub stat: String,
    pub values: [f64; 9],
}

/// Geometric and structural errors per horizon. Every segment is in meters
/// and holds `history` frames followed by the future.
pub fn trajectory_report(
    clips: &[(Vec<Segment>, Segment)],
    history: usize,
    horizons: &[usize],
    fps: f64,
) -> Result<Vec<TrajectoryRow>> {
    let futures: Vec<(Vec<Segment>, Segment)> = clips
        .iter()
        .map(|(samples, truth)| {
            let cut = |s: &Segment| s.slice(history, s.frames.saturating_sub(history));
            Ok((samples.iter().map(cut).collect::<Result<Vec<_>>>()?, cut(truth)?))
        })
        .collect::<Result<_>>()?;
    let geo = aggregate_over_k(&futures, horizons)?;
    let mut rows = Vec::new();
    for (g, &h) in geo.iter().zip(horizons) {
        let (smin, savg) = structure_deviation(clips, history, h)?;
        for (stat, ade, fde, s) in [("min", g.min_ade, g.min_fde, smin), ("avg", g.avg_ade, g.avg_fde, savg)] {
            let mut values = [0.0; 9];
            values[0] = ade;
            values[1] = fde;
            values[2..].copy_from_slice(&s);
            rows.push(TrajectoryRow {
                horizon_frames: h,
                horizon_seconds: h as f64 / fps,
                stat: stat.into(),
                values,
            });
        }
    }
    Ok(rows)
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = format!("horizon_s,stat,{}\n", TRAJECTORY_COLUMNS.join(","));
    for r in rows {
        write!(s, "{:.2},{}", r.horizon_seconds, r.stat).unwrap();
        for v in &r.values {
            write!(s, ",{v:.6}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Offense and defense measures of one frame. The attacking side plays
/// toward `+x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffenseDefense {
    pub obet: f64,
    pub depth_threat: f64,
    pub width_threat: f64,
    pub disruption: f64,
    /// m².
    pub dominant_region: f64,
}

pub const OFFENSE_DEFENSE_COLUMNS: [&str; 5] = ["obet", "depth_threat", "width_threat", "disruption", "dominant_region"];

impl OffenseDefense {
    pub fn values(&self) -> [f64; 5] {
        [self.obet, self.depth_threat, self.width_threat, self.disruption, self.dominant_region]
    }
}

fn movers(seg: &Segment, side: usize, t: usize) -> Vec<Mover> {
    seg.team_slots(side)
        .filter_map(|e| {
            let p = seg.get(t, e)?;
            let v = t
                .checked_sub(1)
                .and_then(|u| seg.get(u, e))
                .map(|q: Point| [(p[0] - q[0]) * seg.fps, (p[1] - q[1]) * seg.fps])
                .unwrap_or([0.0, 0.0]);
            Some(Mover { position: p, velocity: v })
        })
        .collect()
}

fn team_area(seg: &Segment, side: usize, t: usize) -> f64 {
    let pts: Vec<Point> = seg.team_slots(side).filter_map(|e| seg.get(t, e)).collect();
    polygon_area(&convex_hull(&pts))
}

/// Measures at frame `t` of a segment in meters. Disruption compares the
/// defending hull `stride` frames before and after `t`, clamped to the
/// segment.
pub fn offense_defense(
    seg: &Segment,
    attack_side: usize,
    t: usize,
    stride: usize,
    grid: &ControlGrid,
    rule: ControlRule,
    kinematics: &Kinematics,
) -> Result<OffenseDefense> {
    if attack_side > 1 || t >= seg.frames {
        return Err(invalid("attacking side must be 0 or 1 and the frame inside the segment"));
    }
    let defense_side = 1 - attack_side;
    let (atk, def) = (movers(seg, attack_side, t), movers(seg, defense_side, t));
    if atk.is_empty() || def.is_empty() {
        return Err(invalid(format!("frame {t} lacks players on one side")));
    }
    let owners = control_map(grid, &atk, &def, rule, kinematics);
    let before = t.saturating_sub(stride);
    let after = (t + stride).min(seg.frames - 1);
    Ok(OffenseDefense {
        obet: obet(grid, &owners)?,
        depth_threat: depth_threat(grid, &owners),
        width_threat: width_threat(grid, &owners),
        disruption: defensive_disruption(
            team_area(seg, defense_side, before),
            team_area(seg, defense_side, after),
            &grid.pitch,
        ),
        dominant_region: dominant_region(grid, &def, &atk, kinematics)?.defense_area(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PitchSpec;
    use crate::metrics::pitch_control::EpvGrid;

    fn seg(frames: usize, offset: f64) -> Segment {
        let mut s = Segment::empty(5.0, 3, frames);
        for t in 0..frames {
            for e in 0..6 {
                let side = if e < 3 { -1.0 } else { 1.0 };
                s.set(t, e, Some([side * (5.0 + e as f64) + 0.5 * t as f64, (e as f64 - 2.5) * 4.0 + offset]));
            }
        }
        s
    }

    #[test]
    fn perfect_samples_have_zero_rows() {
        let truth = seg(8, 0.0);
        let rows = trajectory_report(&[(vec![truth.clone(), seg(8, 1.0)], truth)], 3, &[2, 5], 5.0).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].values, [0.0; 9]);
        assert!((rows[1].values[0] - 0.5).abs() < 1e-12);
        let csv = trajectory_csv(&rows);
        assert!(csv.starts_with("horizon_s,stat,ADE,FDE,dSI,dSA,dTW,dTL,dFN,dCD,dSO\n0.40,min,0.000000"));
    }

    #[test]
    fn offense_defense_ranges() {
        let pitch = PitchSpec::soccer();
        let grid = ControlGrid::new(pitch, 1.0, &EpvGrid::synthetic(&pitch, 34, 50)).unwrap();
        let s = seg(8, 0.0);
        let m = offense_defense(&s, 1, 4, 2, &grid, ControlRule::Nearest, &Kinematics::default()).unwrap();
        assert!((0.0..=1.0).contains(&m.obet));
        assert!((0.0..=1.0).contains(&m.depth_threat) && (0.0..=1.0).contains(&m.width_threat));
        assert!((-1.0..=1.0).contains(&m.disruption));
        assert!((0.0..=7140.0).contains(&m.dominant_region));
        let flipped = offense_defense(&s, 0, 4, 2, &grid, ControlRule::Nearest, &Kinematics::default()).unwrap();
        assert!(m.obet > flipped.obet);
    }
}
