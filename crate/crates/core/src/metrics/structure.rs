use serde::{Deserialize, Serialize};

use crate::data::{Point, Segment};
use crate::error::{invalid, Result};

/// Players slower than this (m/s) are left out of the order parameter.
pub const KURAMOTO_MIN_SPEED: f64 = 0.1;

/// Counter-clockwise hull without collinear points (monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let s: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    s.abs() / 2.0
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Seven team-shape measures for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureVector {
    pub stretch_index: f64,
    pub surface_area: f64,
    pub team_width: f64,
    pub team_length: f64,
    pub frobenius_norm: f64,
    /// `None` without a previous frame.
    pub centroid_displacement: Option<f64>,
    pub kuramoto_order: f64,
    /// Fewer than three distinct non-collinear players.
    pub degenerate_area: bool,
    /// No player above [`KURAMOTO_MIN_SPEED`]; the order is then 1.
    pub degenerate_order: bool,
}

impl StructureVector {
    /// `[SI, SA, TW, TL, FN, CD, SO]`; a missing displacement reads as 0.
    pub fn values(&self) -> [f64; 7] {
        [
            self.stretch_index,
            self.surface_area,
            self.team_width,
            self.team_length,
            self.frobenius_norm,
            self.centroid_displacement.unwrap_or(0.0),
            self.kuramoto_order,
        ]
    }
}

/// Shape of one team. `prev` is the team's positions one frame earlier;
/// `velocities` are in m/s, one per player.
pub fn structure(positions: &[Point], prev: Option<&[Point]>, velocities: &[Point]) -> Result<StructureVector> {
    if positions.is_empty() {
        return Err(invalid("structure needs at least one visible player"));
    }
    let c = centroid(positions);
    let n = positions.len() as f64;
    let stretch = positions.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).sum::<f64>() / n;
    let hull = convex_hull(positions);
    let area = polygon_area(&hull);
    let span = |k: usize| {
        let (lo, hi) = positions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
        hi - lo
    };
    let mut fro = 0.0;
    for a in positions {
        for b in positions {
            fro += (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        }
    }
    let displacement = match prev {
        Some(p) if !p.is_empty() => {
            let pc = centroid(p);
            Some((c[0] - pc[0]).hypot(c[1] - pc[1]))
        }
        _ => None,
    };
    let (mut sx, mut sy, mut m) = (0.0, 0.0, 0usize);
    for v in velocities {
        let s = v[0].hypot(v[1]);
        if s >= KURAMOTO_MIN_SPEED {
            sx += v[0] / s;
            sy += v[1] / s;
            m += 1;
        }
    }
    let order = if m == 0 { 1.0 } else { (sx.hypot(sy) / m as f64).min(1.0) };
    Ok(StructureVector {
        stretch_index: stretch,
        surface_area: area,
        team_width: span(1),
        team_length: span(0),
        frobenius_norm: fro.sqrt(),
        centroid_displacement: displacement,
        kuramoto_order: order,
        degenerate_area: hull.len() < 3,
        degenerate_order: m == 0,
    })
}

/// Per-frame structure of one team for frames `start..seg.frames` of a
/// segment in meters. Velocities are backward differences; frame 0 uses the
/// forward difference and has no displacement.
pub fn team_series(seg: &Segment, side: usize, start: usize) -> Result<Vec<StructureVector>> {
    let slots = seg.team_slots(side);
    let visible = |t: usize| -> Vec<(usize, Point)> { slots.clone().filter_map(|e| seg.get(t, e).map(|p| (e, p))).collect() };
    (start..seg.frames)
        .map(|t| {
            let now = visible(t);
            let positions: Vec<Point> = now.iter().map(|x| x.1).collect();
            let (other, sign) = if t > 0 { (t - 1, 1.0) } else { (t + 1, -1.0) };
            let velocities: Vec<Point> = if seg.frames > 1 {
                now.iter()
                    .filter_map(|&(e, p)| {
                        seg.get(other, e)
                            .map(|q| [sign * (p[0] - q[0]) * seg.fps, sign * (p[1] - q[1]) * seg.fps])
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let prev: Option<Vec<Point>> = (t > 0).then(|| visible(t - 1).into_iter().map(|x| x.1).collect());
            structure(&positions, prev.as_deref(), &velocities)
        })
        .collect()
}

pub const STRUCTURE_COLUMNS: [&str; 7] = ["SI", "SA", "TW", "TL", "FN", "CD", "SO"];

/// Mean over frames `start..start+frames` and over both teams of
/// `|m(pred) − m(truth)|`, per metric. Segments are in meters and include
/// the history before `start` so the first future frame has a predecessor.
pub fn structure_deltas(pred: &Segment, truth: &Segment, start: usize, frames: usize) -> Result<[f64; 7]> {
    if pred.frames < start + frames || truth.frames < start + frames || frames == 0 {
        return Err(invalid("structure comparison outside the segments"));
    }
    let mut acc = [0.0; 7];
    let mut count = 0usize;
    for side in 0..2 {
        let p = team_series(&pred.slice(0, start + frames)?, side, start)?;
        let q = team_series(&truth.slice(0, start + frames)?, side, start)?;
        for (a, b) in p.iter().zip(&q) {
            for (k, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
                acc[k] += (x - y).abs();
            }
            count += 1;
        }
    }
    Ok(acc.map(|v| v / count as f64))
}

/// Per clip: min and mean over `K` of [`structure_deltas`]; then averaged
/// over clips. Returns `(min, avg)`.
pub fn structure_deviation(
    clips: &[(Vec<Segment>, Segment)],
    start: usize,
    frames: usize,
) -> Result<([f64; 7], [f64; 7])> {
    if clips.is_empty() {
        return Err(invalid("no clips to evaluate"));
    }
    let (mut min_acc, mut avg_acc) = ([0.0; 7], [0.0; 7]);
    for (samples, truth) in clips {
        let d = samples
            .iter()
            .map(|s| structure_deltas(s, truth, start, frames))
            .collect::<Result<Vec<_>>>()?;
        if d.is_empty() {
            return Err(invalid("a clip has no samples"));
        }
        for k in 0..7 {
            min_acc[k] += d.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min);
            avg_acc[k] += d.iter().map(|x| x[k]).sum::<f64>() / d.len() as f64;
        }
    }
    let n = clips.len() as f64;
    Ok((min_acc.map(|v| v / n), avg_acc.map(|v| v / n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;
    use rand::Rng;

    #[test]
    fn coincident_players() {
        let s = structure(&[[3.0, 4.0]; 5], None, &[]).unwrap();
        assert_eq!(
            (s.stretch_index, s.surface_area, s.team_width, s.team_length, s.frobenius_norm),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert!(s.degenerate_area && s.degenerate_order);
        assert_eq!(s.kuramoto_order, 1.0);
        assert!(structure(&[], None, &[]).is_err());
    }

    #[test]
    fn unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let s = structure(&sq, Some(&[[0.0, 0.0]]), &[]).unwrap();
        assert_eq!(s.surface_area, 1.0);
        assert_eq!((s.team_width, s.team_length), (1.0, 1.0));
        assert!((s.stretch_index - 2f64.sqrt() / 2.0).abs() < 1e-15);
        // 8 ordered pairs at distance 1, 4 at distance √2.
        assert!((s.frobenius_norm - 16f64.sqrt()).abs() < 1e-15);
        assert!((s.centroid_displacement.unwrap() - 0.5f64.hypot(0.5)).abs() < 1e-15);
    }

    #[test]
    fn order_parameter() {
        let p = [[0.0, 0.0]; 4];
        let same = structure(&p, None, &[[1.0, 1.0], [2.0, 2.0], [0.5, 0.5], [3.0, 3.0]]).unwrap();
        assert!((same.kuramoto_order - 1.0).abs() < 1e-15);
        let opposed = structure(&p, None, &[[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0], [-3.0, 0.0]]).unwrap();
        assert!(opposed.kuramoto_order.abs() < 1e-15);
        let slow = structure(&p, None, &[[1.0, 0.0], [0.0, 0.05]]).unwrap();
        assert_eq!(slow.kuramoto_order, 1.0);
        assert!(!slow.degenerate_order);
    }

    #[test]
    fn hull_area_vs_monte_carlo() {
        let mut rng = RngStream::new(11).rng();
        for _ in 0..50 {
            let n = rng.random_range(3..12);
            let pts: Vec<Point> = (0..n).map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
            let hull = convex_hull(&pts);
            let area = polygon_area(&hull);
            let inside = |q: Point| {
                (0..hull.len()).all(|i| {
                    let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
                })
            };
            let draws = 400_000;
            let hits = (0..draws)
                .filter(|_| inside([rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]))
                .count();
            let mc = 100.0 * hits as f64 / draws as f64;
            assert!((area - mc).abs() <= 0.01 * area.max(5.0), "{area} vs {mc}");
        }
    }

    #[test]
    fn collinear_hull_is_degenerate() {
        let line: Vec<Point> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert_eq!(polygon_area(&convex_hull(&line)), 0.0);
        assert!(structure(&line, None, &[]).unwrap().degenerate_area);
    }

    #[test]
    fn translation_invariance() {
        let mut rng = RngStream::new(2).rng();
        let pts: Vec<Point> = (0..11).map(|_| [rng.random_range(-40.0..40.0), rng.random_range(-30.0..30.0)]).collect();
        let moved: Vec<Point> = pts.iter().map(|p| [p[0] + 7.25, p[1] - 3.5]).collect();
        let (a, b) = (structure(&pts, None, &[]).unwrap(), structure(&moved, None, &[]).unwrap());
        for (x, y) in a.values()[..5].iter().zip(&b.values()[..5]) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    fn team_seg(frames: usize, f: impl Fn(usize, usize) -> Point) -> Segment {
        let mut s = Segment::empty(25.0, 3, frames);
        for t in 0..frames {
            for e in 0..7 {
                s.set(t, e, Some(f(t, e)));
            }
        }
        s
    }

    #[test]
    fn deltas_zero_for_truth_and_translation() {
        let truth = team_seg(6, |t, e| [e as f64 * 3.0 + 0.1 * t as f64, (e * e) as f64 * 0.5]);
        assert_eq!(structure_deltas(&truth, &truth, 2, 4).unwrap(), [0.0; 7]);
        let shifted = truth.map_points(|p| [p[0] + 5.0, p[1] + 1.0]);
        let d = structure_deltas(&shifted, &truth, 2, 4).unwrap();
        for v in &d[..5] {
            assert!(v.abs() < 1e-12);
        }
        assert!(d[5].abs() < 1e-12 && d[6].abs() < 1e-12);
    }

    #[test]
    fn k_deviation_manual() {
        let truth = team_seg(2, |_, e| [e as f64, 0.0]);
        let wide = team_seg(2, |_, e| [2.0 * e as f64, 0.0]);
        let (min, avg) = structure_deviation(&[(vec![truth.clone(), wide.clone()], truth.clone())], 1, 1).unwrap();
        let d = structure_deltas(&wide, &truth, 1, 1).unwrap();
        // Team length of team 0 goes 2 -> 4, team 1 goes 2 -> 4.
        assert_eq!(d[3], 2.0);
        assert_eq!(min, [0.0; 7]);
        for k in 0..7 {
            assert_eq!(avg[k], d[k] / 2.0);
        }
    }
}
