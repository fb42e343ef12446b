use serde::{Deserialize, Serialize};

use crate::data::{Point, Segment};
use crate::error::{invalid, Result};

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mean Euclidean error over the series.
pub fn ade(pred: &[Point], truth: &[Point]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| dist(*p, *t)).sum::<f64>() / pred.len() as f64)
}

/// Error at the last step.
pub fn fde(pred: &[Point], truth: &[Point]) -> Result<f64> {
    check(pred, truth)?;
    Ok(dist(pred[pred.len() - 1], truth[truth.len() - 1]))
}

fn check(pred: &[Point], truth: &[Point]) -> Result<()> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(invalid(format!("series lengths {} and {} differ or are empty", pred.len(), truth.len())));
    }
    Ok(())
}

/// Player-averaged ADE and FDE over the first `frames` frames. A player
/// counts when it is visible in both segments on every one of those frames.
pub fn segment_errors(pred: &Segment, truth: &Segment, frames: usize) -> Result<(f64, f64)> {
    if pred.players_per_team != truth.players_per_team || pred.frames < frames || truth.frames < frames || frames == 0 {
        return Err(invalid(format!(
            "cannot compare {} predicted and {} true frames over {frames}",
            pred.frames, truth.frames
        )));
    }
    let (mut a, mut f, mut n) = (0.0, 0.0, 0usize);
    for e in 0..2 * truth.players_per_team {
        let series: Option<(Vec<Point>, Vec<Point>)> =
            (0..frames).map(|t| Some((pred.get(t, e)?, truth.get(t, e)?))).collect::<Option<Vec<_>>>().map(|v| v.into_iter().unzip());
        if let Some((p, q)) = series {
            a += ade(&p, &q)?;
            f += fde(&p, &q)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(invalid("no player is visible in both prediction and truth"));
    }
    Ok((a / n as f64, f / n as f64))
}

/// Errors at one horizon, averaged over clips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonErrors {
    pub horizon_frames: usize,
    pub min_ade: f64,
    pub avg_ade: f64,
    pub min_fde: f64,
    pub avg_fde: f64,
}

/// Min and mean over the `K` samples of each clip, then the mean over clips,
/// at every horizon prefix.
pub fn aggregate_over_k(clips: &[(Vec<Segment>, Segment)], horizons: &[usize]) -> Result<Vec<HorizonErrors>> {
    if clips.is_empty() {
        return Err(invalid("no clips to evaluate"));
    }
    horizons
        .iter()
        .map(|&h| {
            let mut acc = [0.0; 4];
            for (samples, truth) in clips {
                if samples.is_empty() {
                    return Err(invalid("a clip has no samples"));
                }
                let errs = samples
                    .iter()
                    .map(|s| segment_errors(s, truth, h))
                    .collect::<Result<Vec<_>>>()?;
                let k = errs.len() as f64;
                acc[0] += errs.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
                acc[1] += errs.iter().map(|e| e.0).sum::<f64>() / k;
                acc[2] += errs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
                acc[3] += errs.iter().map(|e| e.1).sum::<f64>() / k;
            }
            let n = clips.len() as f64;
            Ok(HorizonErrors {
                horizon_frames: h,
                min_ade: acc[0] / n,
                avg_ade: acc[1] / n,
                min_fde: acc[2] / n,
                avg_fde: acc[3] / n,
            })
        })
        .collect()
}
