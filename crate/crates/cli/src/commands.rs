//! The pipeline stages. Each reads its inputs from the project described by
//! a [`Config`] and writes its outputs under `output_dir`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use adeffect_core::analysis::{correlation_report, extremes_distribution, reliability_report, GroupBy};
use adeffect_core::data_model::{
    balance_classes, class_counts, read_jsonl, read_raw_records, write_jsonl, CleanVideoRecord, RawVideoRecord,
};
use adeffect_core::detection_features::{audio_loudness, DetectionFile};
use adeffect_core::evaluation::{run_experiment, ExperimentReport, TaskKind, TaskSpec};
use adeffect_core::features::{ExtractedParts, VideoFeatures};
use adeffect_core::text_features::{text_block, TextFeatureBlock, Transcript};
use adeffect_core::visual_features::{average_memorability, load_frames, read_scores, visual_block, VisualFeatureBlock};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::report;

/// What a command left behind besides its output files.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub warnings: Vec<VideoIssue>,
    pub errors: Vec<VideoIssue>,
}

impl Outcome {
    /// 0 when clean, 2 when some videos had warnings or errors.
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() && self.errors.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VideoIssue {
    pub video_id: String,
    pub message: String,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct BalanceReport {
    seed: u64,
    before: [usize; 5],
    after: [usize; 5],
    total_before: usize,
    total_after: usize,
}

/// Aggregate labels, then undersample to the rarest effectiveness class.
pub fn cmd_clean(config: &Config) -> Result<Outcome> {
    let raw = read_raw_records(&config.paths.raw_records)
        .with_context(|| format!("reading {}", config.paths.raw_records.display()))?;
    let clean = raw
        .iter()
        .map(CleanVideoRecord::from_raw)
        .collect::<adeffect_core::Result<Vec<_>>>()?;
    let balanced = balance_classes(&clean, config.balance_seed)?;
    create_dir(&config.paths.output_dir)?;
    write_jsonl(&config.clean_path(), &clean)?;
    write_jsonl(&config.balanced_path(), &balanced)?;
    let report = BalanceReport {
        seed: config.balance_seed,
        before: class_counts(&clean),
        after: class_counts(&balanced),
        total_before: clean.len(),
        total_after: balanced.len(),
    };
    write_json(&config.paths.output_dir.join("balance_report.json"), &report)?;
    log::info!("balanced {} videos down to {}", report.total_before, report.total_after);
    Ok(Outcome::default())
}

fn resolve(config: &Config, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.paths.assets_root.join(p)
    }
}

fn feature_path(config: &Config, video_id: &str) -> Result<PathBuf> {
    if video_id.is_empty() || video_id.starts_with('.') || video_id.contains(['/', '\\']) {
        bail!("video id {video_id:?} cannot be used as a file name");
    }
    Ok(config.features_dir().join(format!("{video_id}.json")))
}

/// Extract every feature block for one video. Missing optional assets
/// become zero blocks and are reported in the returned warnings.
pub fn extract_video(config: &Config, raw: &RawVideoRecord) -> Result<VideoFeatures> {
    let record = CleanVideoRecord::from_raw(raw)?;
    let assets = &raw.assets;
    let mut warnings = Vec::new();

    let visual = match &assets.frames {
        Some(dir) => {
            let seq = load_frames(&resolve(config, dir), config.frame_rate)?;
            visual_block(&seq, &config.visual)?
        }
        None => {
            warnings.push("no frames: zero visual block".to_string());
            VisualFeatureBlock::zero()
        }
    };
    let memorability = match &assets.memorability {
        Some(p) => average_memorability(&read_scores(&resolve(config, p))?)?,
        None => {
            warnings.push("no memorability scores: 0".to_string());
            0.0
        }
    };
    let text = match &assets.transcript {
        Some(p) => text_block(&Transcript::read(&resolve(config, p))?),
        None => {
            warnings.push("no transcript: zero text block".to_string());
            TextFeatureBlock::zero()
        }
    };
    let detections = match &assets.detections {
        Some(p) => DetectionFile::read(&resolve(config, p))?,
        None => {
            warnings.push("no detections: zero counts".to_string());
            DetectionFile::default()
        }
    };
    let loudness = match &assets.audio {
        Some(p) => audio_loudness(&read_scores(&resolve(config, p))?),
        None => audio_loudness(&detections.audio),
    };
    Ok(VideoFeatures::assemble(ExtractedParts {
        record: &record,
        visual: &visual,
        memorability,
        text: &text,
        detections: detections.counts()?,
        audio_loudness: loudness,
        climax_count: detections.climaxes.len(),
        warnings,
    }))
}

#[derive(Debug, Serialize)]
struct FeatureSummary<'a> {
    videos: usize,
    written: usize,
    warnings: &'a [VideoIssue],
    errors: &'a [VideoIssue],
}

/// Write one feature file per raw record. Per-video failures are recorded
/// and the run continues.
pub fn cmd_features(config: &Config) -> Result<Outcome> {
    let raw = read_raw_records(&config.paths.raw_records)
        .with_context(|| format!("reading {}", config.paths.raw_records.display()))?;
    let dir = config.features_dir();
    create_dir(&dir)?;
    let results: Vec<Result<(PathBuf, VideoFeatures)>> = config.install(|| {
        raw.par_iter()
            .map(|r| Ok((feature_path(config, &r.video_id)?, extract_video(config, r)?)))
            .collect()
    })?;

    let mut outcome = Outcome::default();
    let mut written = 0;
    for (r, result) in raw.iter().zip(results) {
        match result {
            Ok((path, features)) => {
                features.write(&path)?;
                written += 1;
                outcome.warnings.extend(features.warnings.iter().map(|w| VideoIssue {
                    video_id: r.video_id.clone(),
                    message: w.clone(),
                }));
            }
            Err(e) => {
                log::warn!("{}: {e:#}", r.video_id);
                outcome.errors.push(VideoIssue {
                    video_id: r.video_id.clone(),
                    message: format!("{e:#}"),
                });
            }
        }
    }
    let summary = FeatureSummary {
        videos: raw.len(),
        written,
        warnings: &outcome.warnings,
        errors: &outcome.errors,
    };
    write_json(&config.paths.output_dir.join("features_summary.json"), &summary)?;
    Ok(outcome)
}

/// Correlations, annotator reliability and extreme-video distributions.
/// Feature-derived correlation rows use whichever feature files exist.
pub fn cmd_analyze(config: &Config) -> Result<Outcome> {
    let raw = read_raw_records(&config.paths.raw_records)
        .with_context(|| format!("reading {}", config.paths.raw_records.display()))?;
    let mut features = HashMap::new();
    for r in &raw {
        let path = feature_path(config, &r.video_id)?;
        if path.exists() {
            features.insert(r.video_id.clone(), VideoFeatures::read(&path)?);
        }
    }
    let dir = config.analysis_dir();
    create_dir(&dir)?;
    let correlations = correlation_report(&raw, &features)?;
    report::write_correlations(&dir.join("correlations.csv"), &correlations)?;
    let reliability = reliability_report(&raw)?;
    report::write_reliability(&dir.join("reliability.csv"), &reliability)?;
    for by in [GroupBy::Topic, GroupBy::Sentiment] {
        let extremes = extremes_distribution(&raw, config.extremes_k, by)?;
        report::write_extremes(&dir.join(format!("extremes_{}.csv", by.name())), &extremes)?;
    }
    Ok(Outcome::default())
}

/// Load the balanced records and their feature files.
pub fn load_training_set(config: &Config) -> Result<(Vec<CleanVideoRecord>, Vec<VideoFeatures>)> {
    let records: Vec<CleanVideoRecord> = read_jsonl(&config.balanced_path())
        .with_context(|| format!("reading {} (run `clean` first)", config.balanced_path().display()))?;
    let features = records
        .iter()
        .map(|r| {
            let path = feature_path(config, &r.video_id)?;
            VideoFeatures::read(&path).with_context(|| format!("feature file for video {}", r.video_id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, features))
}

/// Train and evaluate the ensemble for each task; write the accuracy
/// table, confusion matrices and every seed's models.
pub fn cmd_train_eval(config: &Config, tasks: &[TaskKind]) -> Result<Vec<ExperimentReport>> {
    if tasks.is_empty() {
        bail!("no tasks selected");
    }
    let (records, features) = load_training_set(config)?;
    let dir = config.results_dir();
    create_dir(&dir)?;
    let mut reports = Vec::new();
    for &kind in tasks {
        let task = TaskSpec::new(kind);
        let report = config
            .install(|| run_experiment(&records, &features, &task, &config.seeds, &config.experiment))?
            .with_context(|| format!("{} task", kind.name()))?;
        write_json(&dir.join(format!("confusion_{}.json", kind.name())), &report.confusion)?;
        report::write_seed_accuracies(&dir.join(format!("per_seed_{}.csv", kind.name())), &report)?;
        for run in &report.runs {
            run.ensemble
                .save(&dir.join("models").join(kind.name()).join(format!("seed_{}", run.seed)))?;
        }
        reports.push(report);
    }
    report::write_table(&dir.join("table.csv"), &reports)?;
    Ok(reports)
}
