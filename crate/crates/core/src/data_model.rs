//! Dataset records, label aggregation, class balancing and splitting.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const ANNOTATORS: usize = 5;
pub const EFFECTIVENESS_LEVELS: u8 = 5;
pub const TOPICS: usize = 38;
pub const SENTIMENTS: usize = 30;

/// One annotator's labels for one video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub effectiveness: u8,
    pub topic: u8,
    pub sentiment: u8,
    pub exciting: u8,
    pub funny: u8,
    pub language: i8,
}

impl AnnotationSet {
    pub fn validate(&self) -> Result<()> {
        if !(1..=EFFECTIVENESS_LEVELS).contains(&self.effectiveness) {
            return Err(Error::invalid(format!(
                "effectiveness {} outside 1..=5",
                self.effectiveness
            )));
        }
        if usize::from(self.topic) >= TOPICS {
            return Err(Error::invalid(format!("topic {} outside 0..38", self.topic)));
        }
        if usize::from(self.sentiment) >= SENTIMENTS {
            return Err(Error::invalid(format!(
                "sentiment {} outside 0..30",
                self.sentiment
            )));
        }
        if self.exciting > 1 || self.funny > 1 {
            return Err(Error::invalid("exciting/funny must be 0 or 1"));
        }
        if !(-1..=1).contains(&self.language) {
            return Err(Error::invalid(format!(
                "language {} outside -1..=1",
                self.language
            )));
        }
        Ok(())
    }
}

/// Paths to the per-video assets. Relative paths resolve against the
/// assets root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memorability: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawVideoRecord {
    pub video_id: String,
    pub ratings: Vec<AnnotationSet>,
    pub duration_seconds: f64,
    #[serde(default)]
    pub assets: Assets,
    /// Free-text "action because reason" statements, one per annotator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub statements: Vec<String>,
}

impl RawVideoRecord {
    pub fn validate(&self) -> Result<()> {
        if self.ratings.len() != ANNOTATORS {
            return Err(Error::invalid(format!(
                "video {}: expected {} annotation sets, found {}",
                self.video_id,
                ANNOTATORS,
                self.ratings.len()
            )));
        }
        if !(self.duration_seconds > 0.0 && self.duration_seconds.is_finite()) {
            return Err(Error::invalid(format!(
                "video {}: duration_seconds must be positive",
                self.video_id
            )));
        }
        for r in &self.ratings {
            r.validate()
                .map_err(|e| Error::invalid(format!("video {}: {e}", self.video_id)))?;
        }
        Ok(())
    }

    pub fn effectiveness_ratings(&self) -> Vec<u8> {
        self.ratings.iter().map(|r| r.effectiveness).collect()
    }

    pub fn mean_effectiveness(&self) -> f64 {
        let sum: f64 = self.ratings.iter().map(|r| f64::from(r.effectiveness)).sum();
        sum / self.ratings.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanVideoRecord {
    pub video_id: String,
    pub effectiveness: u8,
    pub topic: u8,
    pub sentiment: u8,
    pub exciting: u8,
    pub funny: u8,
    pub language: i8,
    pub duration_seconds: f64,
}

impl CleanVideoRecord {
    pub fn from_raw(raw: &RawVideoRecord) -> Result<Self> {
        raw.validate()?;
        let field = |f: fn(&AnnotationSet) -> i16| -> Result<i16> {
            aggregate_mode(&raw.ratings.iter().map(f).collect::<Vec<_>>())
        };
        // Values were range-checked by validate, so the narrowing casts are exact.
        Ok(CleanVideoRecord {
            video_id: raw.video_id.clone(),
            effectiveness: field(|r| r.effectiveness.into())? as u8,
            topic: field(|r| r.topic.into())? as u8,
            sentiment: field(|r| r.sentiment.into())? as u8,
            exciting: field(|r| r.exciting.into())? as u8,
            funny: field(|r| r.funny.into())? as u8,
            language: field(|r| r.language.into())? as i8,
            duration_seconds: raw.duration_seconds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Most frequent of the five annotator values; ties go to the smallest.
pub fn aggregate_mode<T: Ord + Copy>(values: &[T]) -> Result<T> {
    if values.len() != ANNOTATORS {
        return Err(Error::invalid(format!(
            "mode aggregation needs {ANNOTATORS} values, got {}",
            values.len()
        )));
    }
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    // BTreeMap iterates in ascending key order, so keeping only strictly
    // larger counts leaves the smallest value among the tied maxima.
    let mut best = None;
    for (value, count) in counts {
        match best {
            Some((_, c)) if count <= c => {}
            _ => best = Some((value, count)),
        }
    }
    Ok(best.expect("five values").0)
}

pub fn class_counts(records: &[CleanVideoRecord]) -> [usize; EFFECTIVENESS_LEVELS as usize] {
    let mut counts = [0; EFFECTIVENESS_LEVELS as usize];
    for r in records {
        counts[usize::from(r.effectiveness - 1)] += 1;
    }
    counts
}

/// Undersample every effectiveness class to the size of the rarest one.
///
/// Each class is ordered by `video_id` before a seeded shuffle, so the
/// result does not depend on input order. Output is sorted by class and
/// then `video_id`.
pub fn balance_classes(records: &[CleanVideoRecord], seed: u64) -> Result<Vec<CleanVideoRecord>> {
    let mut by_class: Vec<Vec<&CleanVideoRecord>> = vec![Vec::new(); EFFECTIVENESS_LEVELS as usize];
    for r in records {
        if !(1..=EFFECTIVENESS_LEVELS).contains(&r.effectiveness) {
            return Err(Error::invalid(format!(
                "video {}: effectiveness {} outside 1..=5",
                r.video_id, r.effectiveness
            )));
        }
        by_class[usize::from(r.effectiveness - 1)].push(r);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(empty as u8 + 1));
    }
    let quota = by_class.iter().map(Vec::len).min().unwrap_or(0);

    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(quota * by_class.len());
    for mut class in by_class {
        class.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        class.shuffle(&mut rng);
        let mut kept: Vec<_> = class.into_iter().take(quota).cloned().collect();
        kept.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        out.extend(kept);
    }
    Ok(out)
}

/// Shuffle `0..n` with `seed` and cut at `round(fraction * n)`, clamped so
/// both sides are non-empty.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} records")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let cut = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = order.split_off(cut);
    Ok((order, test))
}

pub fn split_dataset(records: &[CleanVideoRecord], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    let (train, test) = split_indices(records.len(), fraction, seed)?;
    let ids = |idx: Vec<usize>| idx.into_iter().map(|i| records[i].video_id.clone()).collect();
    Ok(DatasetSplit {
        train: ids(train),
        test: ids(test),
        seed,
    })
}

/// Parse JSON Lines, skipping blank lines. Errors carry 1-based line numbers.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Record { line, message } => Error::Record {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Read raw records and validate each one; a bad record fails at its line.
pub fn read_raw_records(path: &Path) -> Result<Vec<RawVideoRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at_line = |message: String| Error::Record {
            line: i + 1,
            message: format!("{}: {message}", path.display()),
        };
        let rec: RawVideoRecord = serde_json::from_str(&line).map_err(|e| at_line(e.to_string()))?;
        rec.validate().map_err(|e| at_line(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::json(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
