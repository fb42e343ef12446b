use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use gentac_core::backbone::{decode_checkpoint, encode_checkpoint, sha256_hex, Checkpoint, ForecastMode};
use gentac_core::data::{parse_raw_clip, refine_raw, resample, serialize_clip, ClipMeta, Segment, Sport, Track, TrajectoryClip};
use gentac_core::diffusion::{condition_tagging, rollout, seconds_to_frames, Filter, ForecastSample, Forecaster, Objective};
use gentac_core::event::{
    forecast_event, prediction_csv, prediction_json, summary_csv, EventClassifier, EventLabel, EventModel, EventSample,
    PredictionRecord,
};
use gentac_core::fixtures::{circular_clips, constant_velocity_clips, event_clips, two_style_clips, MotionParams};
use gentac_core::metrics::{event_metrics, event_report_csv, trajectory_csv, trajectory_report};
use gentac_core::numeric::RngStream;
use gentac_core::train::{
    event_samples, finetune_event, finetune_forecaster, forecast_windows, metrics_csv, split_clips, train_event,
    train_forecaster, Task, TrainOutcome,
};

use crate::config::RunConfig;
use crate::dataset;
use crate::manifest::{beside, write_manifest, Inputs, Outputs};
use crate::{
    Command, Common, EvaluateEventArgs, EvaluateTrajArgs, FilterArgs, FinetuneArgs, FixtureArgs, FixtureKind,
    ForecastEventArgs, IngestArgs, ObjectiveArg, RefineArgs, ResampleArgs, RolloutArgs, SampleArgs, TrainArgs,
    UsageError,
};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Resample(a) => resample_cmd(a),
        Command::Refine(a) => refine_cmd(a),
        Command::TrainTraj(a) => train_traj(a),
        Command::Finetune(a) => finetune(a),
        Command::TrainEvent(a) => train_event_cmd(a),
        Command::Sample(a) => sample(a),
        Command::EvaluateTraj(a) => evaluate_traj(a),
        Command::EvaluateEvent(a) => evaluate_event(a),
        Command::ForecastEvent(a) => forecast_event_cmd(a),
        Command::MakeFixtures(a) => make_fixtures(a),
    }
}

/// Config file, then `--set`, then the dedicated flags.
fn load_config(common: &Common, flags: &[(&str, Option<String>)]) -> Result<RunConfig> {
    let mut overrides = Vec::new();
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--set expects KEY=VALUE, got {s:?}")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let common_flags = [
        ("seed", common.seed.map(|v| v.to_string())),
        ("sport", common.sport.as_ref().map(|s| format!("{s:?}"))),
        ("fps", common.fps.map(|v| format!("{v:?}"))),
    ];
    for (k, v) in common_flags.iter().chain(flags) {
        if let Some(v) = v {
            overrides.push((k.to_string(), v.clone()));
        }
    }
    if let Some(path) = &common.config {
        require_file(path)?;
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn num<T: std::fmt::Debug>(v: Option<T>) -> Option<String> {
    v.map(|v| format!("{v:?}"))
}

fn rollout_flags(r: &RolloutArgs) -> [(&'static str, Option<String>); 3] {
    [
        ("window_seconds", num(r.window)),
        ("horizon_seconds", num(r.horizon)),
        ("k", num(r.k)),
    ]
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{} is not a file", path.display());
    }
    Ok(())
}

fn require_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    Ok(())
}

fn read_checkpoint(inputs: &mut Inputs, path: &Path) -> Result<(Checkpoint, String)> {
    let bytes = inputs.read("checkpoint", path)?;
    let ck = decode_checkpoint(&bytes).with_context(|| format!("loading {}", path.display()))?;
    Ok((ck, sha256_hex(&bytes)))
}

fn checkpoint_kind(ck: &Checkpoint) -> &str {
    ck.header.get("kind").and_then(|k| k.as_str()).unwrap_or("")
}

/// `<dir>/<stem>.metrics.csv` for checkpoint `<dir>/<stem>.<ext>`.
fn metrics_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.metrics.csv"))
}

fn clip_stem(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn ingest(a: IngestArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    for p in &a.input {
        require_file(p)?;
    }
    if let Some(e) = &a.event {
        EventLabel::from_subtype(e).map_err(|e| UsageError(e.to_string()))?;
    }
    let mut inputs = Inputs::default();
    let mut clips = Vec::with_capacity(a.input.len());
    for path in &a.input {
        let text = inputs.read_string("raw", path)?;
        let raw = parse_raw_clip(&text, cfg.fps(), cfg.sport).with_context(|| format!("parsing {}", path.display()))?;
        let clip = Track::from_raw(&raw)?.to_clip().with_meta(ClipMeta {
            id: Some(clip_stem(path)),
            team0: a.team0.clone(),
            team1: a.team1.clone(),
            league: a.league.clone(),
            event: a.event.clone(),
        });
        clips.push(clip);
    }
    let mut outputs = Outputs::default();
    dataset::write(&a.out, &clips, &inputs, &mut outputs)?;
    write_manifest(&a.out.join("manifest.json"), "ingest", &cfg, None, &inputs, &outputs)
}

fn resample_cmd(a: ResampleArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    require_file(&a.input)?;
    if !(a.target_fps > 0.0 && a.target_fps.is_finite()) {
        bail!(UsageError(format!("target fps must be positive, got {}", a.target_fps)));
    }
    let mut inputs = Inputs::default();
    let clip = dataset::read_clip(&a.input, cfg.sport, cfg.fps(), &mut inputs)?;
    let out = resample(&clip, a.target_fps)?;
    let mut outputs = Outputs::default();
    outputs.write(&inputs, &a.out, serialize_clip(&out).as_bytes())?;
    write_manifest(&beside(&a.out), "resample", &cfg, None, &inputs, &outputs)
}

fn refine_cmd(a: RefineArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    require_file(&a.input)?;
    let mut inputs = Inputs::default();
    let text = inputs.read_string("data", &a.input)?;
    let raw = parse_raw_clip(&text, cfg.fps(), cfg.sport).with_context(|| format!("parsing {}", a.input.display()))?;
    let out = refine_raw(&raw, &cfg.refine_params())?;
    let mut outputs = Outputs::default();
    outputs.write(&inputs, &a.out, serialize_clip(&out).as_bytes())?;
    write_manifest(&beside(&a.out), "refine", &cfg, None, &inputs, &outputs)
}

fn data_frame(clips: &[TrajectoryClip]) -> Result<(Sport, f64)> {
    let first = clips.first().context("empty dataset")?;
    ensure!(
        clips.iter().all(|c| c.sport == first.sport && c.fps == first.fps),
        "clips mix sports or frame rates"
    );
    Ok((first.sport, first.fps))
}

/// Clip-level split of `clips` into training and validation clips.
fn split<'a>(clips: &[&'a TrajectoryClip], cfg: &RunConfig) -> Result<(Vec<&'a TrajectoryClip>, Vec<&'a TrajectoryClip>)> {
    let (train, valid) = split_clips(clips.len(), cfg.valid_fraction, cfg.seed);
    ensure!(
        !train.is_empty() && !valid.is_empty(),
        "{} clips cannot be split into training and validation",
        clips.len()
    );
    Ok((train.iter().map(|&i| clips[i]).collect(), valid.iter().map(|&i| clips[i]).collect()))
}

fn forecast_split(
    clips: &[&TrajectoryClip],
    cfg: &RunConfig,
    history: usize,
    window: usize,
) -> Result<(Vec<ForecastSample>, Vec<ForecastSample>)> {
    let (train, valid) = split(clips, cfg)?;
    let stride = cfg.stride.unwrap_or(window);
    let t = forecast_windows(&train, history, window, stride)?;
    let v = forecast_windows(&valid, history, window, stride)?;
    ensure!(
        !t.is_empty() && !v.is_empty(),
        "clips are shorter than history + window ({} frames)",
        history + window
    );
    Ok((t, v))
}

fn event_split(clips: &[&TrajectoryClip], cfg: &RunConfig) -> Result<(Vec<EventSample>, Vec<EventSample>)> {
    let (train, valid) = split(clips, cfg)?;
    Ok((event_samples(&train)?, event_samples(&valid)?))
}

fn save_training(
    command: &str,
    out: &Path,
    header: &serde_json::Value,
    store: &gentac_core::numeric::ParamStore,
    outcome: &TrainOutcome,
    cfg: &RunConfig,
    inputs: &Inputs,
) -> Result<()> {
    let bytes = encode_checkpoint(header, store)?;
    let mut outputs = Outputs::default();
    outputs.write(inputs, out, &bytes)?;
    outputs.write(inputs, &metrics_path(out), metrics_csv(&outcome.log).as_bytes())?;
    write_manifest(&beside(out), command, cfg, Some(sha256_hex(&bytes)), inputs, &outputs)
}

fn train_traj(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[("epochs", num(a.epochs))])?;
    require_exists(&a.data)?;
    let mut inputs = Inputs::default();
    let clips = dataset::read(&a.data, &cfg, &mut inputs)?;
    let (sport, fps) = data_frame(&clips)?;
    let fc = cfg.forecaster_config(sport, fps)?;
    let tc = cfg.train_config(Task::Forecast, false)?;
    let refs: Vec<&TrajectoryClip> = clips.iter().collect();
    let (train, valid) = forecast_split(&refs, &cfg, fc.history_frames, fc.window_frames)?;
    let mut model = Forecaster::new(fc, cfg.seed)?;
    let outcome = train_forecaster(&mut model, &train, &valid, &tc)?;
    save_training("train-traj", &a.out, &model.header(), &model.store, &outcome, &cfg, &inputs)
}

fn train_event_cmd(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[("epochs", num(a.epochs))])?;
    require_exists(&a.data)?;
    let mut inputs = Inputs::default();
    let clips = dataset::read(&a.data, &cfg, &mut inputs)?;
    let (sport, fps) = data_frame(&clips)?;
    let longest = clips.iter().map(|c| Segment::from_clip(c).frames).max().unwrap_or(1);
    let ec = cfg.event_config(sport, fps, longest)?;
    let tc = cfg.train_config(Task::Event, false)?;
    let refs: Vec<&TrajectoryClip> = clips.iter().collect();
    let (train, valid) = event_split(&refs, &cfg)?;
    let mut model = EventClassifier::new(ec, cfg.seed)?;
    let outcome = train_event(&mut model, &train, &valid, &tc)?;
    save_training("train-event", &a.out, &model.header(), &model.store, &outcome, &cfg, &inputs)
}

fn filter_of(f: &FilterArgs) -> Filter {
    match (&f.team, &f.league, f.objective) {
        (Some(t), _, _) => Filter::Team(t.clone()),
        (_, Some(l), _) => Filter::League(l.clone()),
        (_, _, Some(ObjectiveArg::Offense)) => Filter::Objective(Objective::Offense),
        _ => Filter::Objective(Objective::Defense),
    }
}

fn finetune(a: FinetuneArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[("epochs", num(a.epochs))])?;
    require_file(&a.checkpoint)?;
    require_exists(&a.data)?;
    let mut inputs = Inputs::default();
    let (ck, _) = read_checkpoint(&mut inputs, &a.checkpoint)?;
    let clips = dataset::read(&a.data, &cfg, &mut inputs)?;
    let (sport, fps) = data_frame(&clips)?;
    let subset = condition_tagging(&clips, &filter_of(&a.filter))?;
    match checkpoint_kind(&ck) {
        "forecaster" => {
            let base = Forecaster::from_checkpoint(ck)?;
            ensure!(
                base.config.sport == sport && base.config.fps == fps,
                "checkpoint expects {} at {} fps",
                base.config.sport,
                base.config.fps
            );
            let tc = cfg.train_config(Task::Forecast, true)?;
            let (train, valid) = forecast_split(&subset, &cfg, base.config.history_frames, base.config.window_frames)?;
            let (model, outcome) = finetune_forecaster(&base, &train, &valid, &tc)?;
            save_training("finetune", &a.out, &model.header(), &model.store, &outcome, &cfg, &inputs)
        }
        "event" => {
            let base = EventClassifier::from_checkpoint(ck)?;
            ensure!(
                base.config.sport == sport && base.config.fps == fps,
                "checkpoint expects {} at {} fps",
                base.config.sport,
                base.config.fps
            );
            let tc = cfg.train_config(Task::Event, true)?;
            let (train, valid) = event_split(&subset, &cfg)?;
            let (model, outcome) = finetune_event(&base, &train, &valid, &tc)?;
            save_training("finetune", &a.out, &model.header(), &model.store, &outcome, &cfg, &inputs)
        }
        other => bail!("unknown checkpoint kind {other:?}"),
    }
}

/// History and optional ground-truth future, both normalized, plus the
/// source clip.
struct Conditioning {
    clip: TrajectoryClip,
    history: Segment,
    future: Option<Segment>,
    /// Frame index of the first generated frame.
    next_index: i64,
}

fn conditioning(
    inputs: &mut Inputs,
    model: &Forecaster,
    history_path: &Path,
    future_path: Option<&Path>,
    start: usize,
    horizon: usize,
) -> Result<Conditioning> {
    let (sport, fps) = (model.config.sport, model.config.fps);
    let pitch = sport.pitch();
    let clip = dataset::read_clip(history_path, sport, fps, inputs)?;
    let seg = Segment::from_clip(&clip).normalized(&pitch)?;
    let h = model.config.history_frames;
    ensure!(
        start + h <= seg.frames,
        "{} has {} frames, history needs {} from offset {start}",
        history_path.display(),
        seg.frames,
        h
    );
    let history = seg.slice(start, h)?;
    let future = match model.config.mode {
        ForecastMode::Joint => None,
        ForecastMode::Single { .. } => Some(match future_path {
            Some(p) => {
                let f = dataset::read_clip(p, sport, fps, inputs)?;
                ensure!(
                    f.roster(0) == clip.roster(0) && f.roster(1) == clip.roster(1),
                    "future rosters differ from the history's"
                );
                Segment::from_clip(&f).normalized(&pitch)?
            }
            None => {
                ensure!(
                    start + h + horizon <= seg.frames,
                    "single-team sampling needs {horizon} future frames after the history"
                );
                seg.slice(start + h, horizon)?
            }
        }),
    };
    let next_index = clip.frames.first().map(|f| f.index).unwrap_or(0) + (start + h) as i64;
    Ok(Conditioning {
        clip,
        history,
        future,
        next_index,
    })
}

fn future_clips(model: &Forecaster, cond: &Conditioning, futures: &[Segment]) -> Result<Vec<TrajectoryClip>> {
    let pitch = model.config.sport.pitch();
    let (r0, r1) = (cond.clip.roster(0), cond.clip.roster(1));
    futures
        .iter()
        .map(|f| Ok(f.denormalized(&pitch).to_clip(cond.next_index, [&r0, &r1], model.config.sport)?))
        .collect()
}

fn sample(a: SampleArgs) -> Result<()> {
    let cfg = load_config(&a.common, &rollout_flags(&a.rollout))?;
    require_file(&a.history)?;
    require_file(&a.checkpoint)?;
    if let Some(f) = &a.future {
        require_file(f)?;
    }
    let mut inputs = Inputs::default();
    let (ck, ck_hash) = read_checkpoint(&mut inputs, &a.checkpoint)?;
    let model = Forecaster::from_checkpoint(ck)?;
    let rc = cfg.rollout_config(model.config.fps, model.config.history_frames, model.config.mode)?;
    let cond = conditioning(&mut inputs, &model, &a.history, a.future.as_deref(), a.start, rc.horizon_frames())?;
    let set = rollout(
        &mut model.denoiser(),
        &model.schedule,
        &cond.history,
        cond.future.as_ref(),
        &rc,
        RngStream::new(cfg.seed).fork("sample"),
    )?;
    let stem = a.stem.clone().unwrap_or_else(|| clip_stem(&a.history));
    let mut outputs = Outputs::default();
    for (k, clip) in future_clips(&model, &cond, &set.futures)?.iter().enumerate() {
        outputs.write(&inputs, &a.out.join(format!("{stem}_k{k}.json")), serialize_clip(clip).as_bytes())?;
    }
    write_manifest(&a.out.join(format!("{stem}_manifest.json")), "sample", &cfg, Some(ck_hash), &inputs, &outputs)
}

/// `<stem>_k<index>.json` files grouped by stem.
fn sample_files(dir: &Path) -> Result<BTreeMap<String, BTreeMap<usize, PathBuf>>> {
    let mut out: BTreeMap<String, BTreeMap<usize, PathBuf>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let Some(base) = name.strip_suffix(".json") else { continue };
        let Some((stem, k)) = base.rsplit_once("_k") else { continue };
        if let Ok(k) = k.parse::<usize>() {
            out.entry(stem.to_string()).or_default().insert(k, path);
        }
    }
    if out.is_empty() {
        bail!("no sample files in {}", dir.display());
    }
    Ok(out)
}

fn evaluate_traj(a: EvaluateTrajArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    if a.k == 0 {
        bail!(UsageError("--k must be at least 1".into()));
    }
    require_exists(&a.pred)?;
    require_exists(&a.truth)?;
    let mut inputs = Inputs::default();
    let groups = sample_files(&a.pred)?;
    let truths: BTreeMap<String, TrajectoryClip> = dataset::read(&a.truth, &cfg, &mut inputs)?
        .into_iter()
        .map(|c| (c.meta.id.clone().unwrap_or_default(), c))
        .collect();
    let mut clips = Vec::with_capacity(groups.len());
    let mut shortest = usize::MAX;
    let mut fps = None;
    for (stem, files) in &groups {
        let truth = match truths.get(stem) {
            Some(t) => t,
            None if truths.len() == 1 && groups.len() == 1 => truths.values().next().expect("one truth clip"),
            None => bail!("no ground truth for {stem}"),
        };
        fps = Some(truth.fps);
        let t_seg = Segment::from_clip(truth);
        let mut samples = Vec::with_capacity(a.k);
        for k in 0..a.k {
            let path = files.get(&k).with_context(|| format!("{stem} has no sample k{k}"))?;
            let pred = dataset::read_clip(path, truth.sport, truth.fps, &mut inputs)?;
            ensure!(
                pred.roster(0) == truth.roster(0) && pred.roster(1) == truth.roster(1),
                "{} rosters differ from the ground truth",
                path.display()
            );
            let offset = pred.frames[0].index - truth.frames[0].index;
            let p_seg = Segment::from_clip(&pred);
            ensure!(
                offset >= 1 && offset as usize + p_seg.frames <= t_seg.frames,
                "{} is not inside its ground truth after at least one history frame",
                path.display()
            );
            let offset = offset as usize;
            shortest = shortest.min(p_seg.frames);
            samples.push((offset, p_seg));
        }
        let offset = samples[0].0;
        ensure!(samples.iter().all(|(o, _)| *o == offset), "samples of {stem} start at different frames");
        let len = samples.iter().map(|(_, s)| s.frames).min().unwrap_or(0);
        let last = t_seg.slice(offset - 1, 1)?;
        let futures = samples
            .iter()
            .map(|(_, s)| last.concat(&s.slice(0, len)?).map_err(Into::into))
            .collect::<Result<Vec<_>>>()?;
        clips.push((futures, t_seg.slice(offset - 1, len + 1)?));
    }
    let fps = fps.context("no clips")?;
    let horizons = a
        .horizons
        .iter()
        .map(|&h| {
            let f = seconds_to_frames(h, fps).map_err(|e| UsageError(e.to_string()))?;
            if f == 0 || f > shortest {
                bail!(UsageError(format!("horizon {h} s is outside the sampled {shortest} frames")));
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = trajectory_report(&clips, 1, &horizons, fps)?;
    let mut outputs = Outputs::default();
    outputs.write(&inputs, &a.out, trajectory_csv(&rows).as_bytes())?;
    write_manifest(&beside(&a.out), "evaluate-traj", &cfg, None, &inputs, &outputs)
}

fn evaluate_event(a: EvaluateEventArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    require_file(&a.checkpoint)?;
    require_exists(&a.data)?;
    let mut inputs = Inputs::default();
    let (ck, ck_hash) = read_checkpoint(&mut inputs, &a.checkpoint)?;
    let model = EventClassifier::from_checkpoint(ck)?;
    let clips = dataset::read(&a.data, &cfg, &mut inputs)?;
    let segments = clips.iter().map(|c| model.prepare(c)).collect::<gentac_core::Result<Vec<_>>>()?;
    let predictions = model.classify(&segments)?;
    let records = clips
        .iter()
        .zip(predictions)
        .map(|(c, prediction)| {
            Ok(PredictionRecord {
                clip_id: c.meta.id.clone().unwrap_or_default(),
                label: c.meta.event.as_deref().map(EventLabel::from_subtype).transpose()?,
                prediction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = Outputs::default();
    outputs.write(&inputs, &a.out.join("predictions.csv"), prediction_csv(&records).as_bytes())?;
    outputs.write(&inputs, &a.out.join("predictions.json"), prediction_json(&records).as_bytes())?;
    let labelled: Vec<&PredictionRecord> = records.iter().filter(|r| r.label.is_some()).collect();
    if !labelled.is_empty() {
        let preds: Vec<_> = labelled.iter().map(|r| r.prediction.clone()).collect();
        let labels: Vec<_> = labelled.iter().filter_map(|r| r.label).collect();
        let report = event_metrics(&preds, &labels)?;
        outputs.write(&inputs, &a.out.join("metrics.csv"), event_report_csv(&report).as_bytes())?;
    }
    write_manifest(&a.out.join("manifest.json"), "evaluate-event", &cfg, Some(ck_hash), &inputs, &outputs)
}

fn forecast_event_cmd(a: ForecastEventArgs) -> Result<()> {
    let cfg = load_config(&a.common, &rollout_flags(&a.rollout))?;
    for p in [&a.history, &a.checkpoint, &a.classifier] {
        require_file(p)?;
    }
    let mut inputs = Inputs::default();
    let (ck, ck_hash) = read_checkpoint(&mut inputs, &a.checkpoint)?;
    let model = Forecaster::from_checkpoint(ck)?;
    let (ek, ek_hash) = read_checkpoint(&mut inputs, &a.classifier)?;
    let classifier = EventClassifier::from_checkpoint(ek)?;
    ensure!(
        classifier.config.sport == model.config.sport && classifier.config.fps == model.config.fps,
        "classifier and forecaster disagree on sport or frame rate"
    );
    let rc = cfg.rollout_config(model.config.fps, model.config.history_frames, model.config.mode)?;
    let cond = conditioning(&mut inputs, &model, &a.history, a.future.as_deref(), a.start, rc.horizon_frames())?;
    let fc = forecast_event(
        &mut model.denoiser(),
        &model.schedule,
        &cond.history,
        cond.future.as_ref(),
        &rc,
        RngStream::new(cfg.seed).fork("sample"),
        &classifier,
        classifier.config.forecast_frames,
    )?;
    let stem = clip_stem(&a.history);
    let records: Vec<PredictionRecord> = fc
        .predictions
        .into_iter()
        .enumerate()
        .map(|(k, prediction)| PredictionRecord {
            clip_id: format!("{stem}_k{k}"),
            label: None,
            prediction,
        })
        .collect();
    let mut outputs = Outputs::default();
    outputs.write(&inputs, &a.out.join("summary.csv"), summary_csv(&fc.summary).as_bytes())?;
    outputs.write(&inputs, &a.out.join("predictions.csv"), prediction_csv(&records).as_bytes())?;
    let hash = sha256_hex(format!("{ck_hash}{ek_hash}").as_bytes());
    write_manifest(&a.out.join("manifest.json"), "forecast-event", &cfg, Some(hash), &inputs, &outputs)
}

fn make_fixtures(a: FixtureArgs) -> Result<()> {
    let cfg = load_config(&a.common, &[])?;
    if a.count == 0 || a.frames == 0 {
        bail!(UsageError("--count and --frames must be positive".into()));
    }
    let p = MotionParams {
        sport: cfg.sport,
        fps: cfg.fps.unwrap_or(MotionParams::default().fps),
        frames: a.frames,
        max_speed: a.max_speed,
        velocity_noise: a.velocity_noise,
    };
    let clips = match a.kind {
        FixtureKind::ConstantVelocity => constant_velocity_clips(&p, a.count, cfg.seed)?,
        FixtureKind::Circular => circular_clips(&p, a.count, cfg.seed)?,
        FixtureKind::TwoStyle => two_style_clips(&p, a.count, cfg.seed)?,
        FixtureKind::Events => event_clips(&p, a.count, cfg.seed)?,
    };
    let inputs = Inputs::default();
    let mut outputs = Outputs::default();
    dataset::write(&a.out, &clips, &inputs, &mut outputs)?;
    write_manifest(&a.out.join("manifest.json"), "make-fixtures", &cfg, None, &inputs, &outputs)
}
