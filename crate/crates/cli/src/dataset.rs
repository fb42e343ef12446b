//! A dataset is a directory of clip files with an optional `dataset.json`
//! index that records the sport, frame rate and per-clip tags. Without an
//! index every `*.json` file in the directory is a clip and the run config
//! supplies sport and frame rate.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gentac_core::data::{parse_clip, serialize_clip, ClipMeta, Sport, TrajectoryClip};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{Inputs, Outputs};

pub const INDEX: &str = "dataset.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    #[serde(flatten)]
    pub meta: ClipMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub sport: Sport,
    pub fps: f64,
    pub clips: Vec<Entry>,
}

fn is_clip_file(name: &str) -> bool {
    name.ends_with(".json") && name != INDEX && !name.ends_with("manifest.json")
}

/// Clips from a dataset directory or a single clip file.
pub fn read(path: &Path, cfg: &RunConfig, inputs: &mut Inputs) -> Result<Vec<TrajectoryClip>> {
    if path.is_file() {
        return Ok(vec![read_clip(path, cfg.sport, cfg.fps(), inputs)?]);
    }
    if !path.is_dir() {
        bail!("{} does not exist", path.display());
    }
    let index_path = path.join(INDEX);
    let index = if index_path.is_file() {
        let index: Index = serde_json::from_slice(&inputs.read("data", &index_path)?)
            .with_context(|| format!("parsing {}", index_path.display()))?;
        if cfg.fps.is_some_and(|f| f != index.fps) {
            bail!("config fps {} disagrees with the dataset's {}", cfg.fps(), index.fps);
        }
        index
    } else {
        let mut names: Vec<String> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| is_clip_file(n))
            .collect();
        names.sort();
        Index {
            sport: cfg.sport,
            fps: cfg.fps(),
            clips: names
                .into_iter()
                .map(|file| Entry {
                    meta: ClipMeta {
                        id: Some(file.trim_end_matches(".json").to_string()),
                        ..Default::default()
                    },
                    file,
                })
                .collect(),
        }
    };
    if index.clips.is_empty() {
        bail!("no clips in {}", path.display());
    }
    index
        .clips
        .iter()
        .map(|e| Ok(read_clip(&path.join(&e.file), index.sport, index.fps, inputs)?.with_meta(e.meta.clone())))
        .collect()
}

pub fn read_clip(path: &Path, sport: Sport, fps: f64, inputs: &mut Inputs) -> Result<TrajectoryClip> {
    let text = inputs.read_string("data", path)?;
    let clip = parse_clip(&text, fps, sport).with_context(|| format!("parsing {}", path.display()))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(clip.with_meta(ClipMeta { id, ..Default::default() }))
}

/// File name of a clip inside a dataset.
pub fn file_name(clip: &TrajectoryClip, i: usize) -> String {
    match &clip.meta.id {
        Some(id) => format!("{id}.json"),
        None => format!("clip{i:05}.json"),
    }
}

/// Writes clips plus index. Entries already indexed under other file names
/// are kept.
pub fn write(dir: &Path, clips: &[TrajectoryClip], inputs: &Inputs, outputs: &mut Outputs) -> Result<()> {
    let first = clips.first().context("no clips to write")?;
    let (sport, fps) = (first.sport, first.fps);
    if clips.iter().any(|c| c.sport != sport || c.fps != fps) {
        bail!("a dataset holds one sport at one frame rate");
    }
    let index_path = dir.join(INDEX);
    let mut entries: Vec<Entry> = match std::fs::read(&index_path) {
        Ok(bytes) => {
            let old: Index = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", index_path.display()))?;
            if old.sport != sport || old.fps != fps {
                bail!("{} holds {} at {} fps", index_path.display(), old.sport, old.fps);
            }
            old.clips
        }
        Err(_) => Vec::new(),
    };
    for (i, clip) in clips.iter().enumerate() {
        let file = file_name(clip, i);
        outputs.write(inputs, &dir.join(&file), serialize_clip(clip).as_bytes())?;
        entries.retain(|e| e.file != file);
        entries.push(Entry {
            file,
            meta: clip.meta.clone(),
        });
    }
    entries.sort_by(|a, b| a.file.cmp(&b.file));
    let mut text = serde_json::to_string_pretty(&Index { sport, fps, clips: entries })?;
    text.push('\n');
    outputs.write(inputs, &index_path, text.as_bytes())
}
