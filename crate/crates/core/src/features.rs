//! Named feature blocks and the per-video feature file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_model::{CleanVideoRecord, SENTIMENTS, TOPICS};
use crate::detection_features::{ratio_block, DetectionCounts, PriorTable};
use crate::error::{Error, Result};
use crate::text_features::{TextFeatureBlock, HASH_BUCKETS};
use crate::visual_features::{VisualFeatureBlock, FLOW_BINS};

pub const FEATURE_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Topic,
    Sentiment,
    Exciting,
    Funny,
    Language,
    AvgHue,
    MedianHue,
    AvgIntensity,
    IntensityMid30,
    IntensityMid60,
    ShotBoundaries,
    FlowHist,
    Memorability,
    Duration,
    TextLength,
    WordCount,
    MeaningfulWordCount,
    AvgWordLength,
    AvgSentenceLength,
    SentimentPolarity,
    CommonWordHash,
    AudioLoudness,
    ClimaxCount,
    ObjectsRatio,
    PlacesRatio,
    ExpressionsRatio,
    EmotionsRatio,
}

impl Block {
    pub const ALL: [Block; 27] = [
        Block::Topic,
        Block::Sentiment,
        Block::Exciting,
        Block::Funny,
        Block::Language,
        Block::AvgHue,
        Block::MedianHue,
        Block::AvgIntensity,
        Block::IntensityMid30,
        Block::IntensityMid60,
        Block::ShotBoundaries,
        Block::FlowHist,
        Block::Memorability,
        Block::Duration,
        Block::TextLength,
        Block::WordCount,
        Block::MeaningfulWordCount,
        Block::AvgWordLength,
        Block::AvgSentenceLength,
        Block::SentimentPolarity,
        Block::CommonWordHash,
        Block::AudioLoudness,
        Block::ClimaxCount,
        Block::ObjectsRatio,
        Block::PlacesRatio,
        Block::ExpressionsRatio,
        Block::EmotionsRatio,
    ];

    pub const TEXT: [Block; 7] = [
        Block::TextLength,
        Block::WordCount,
        Block::MeaningfulWordCount,
        Block::AvgWordLength,
        Block::AvgSentenceLength,
        Block::SentimentPolarity,
        Block::CommonWordHash,
    ];

    /// Blocks that depend on corpus priors and are filled in at training time.
    pub const RATIOS: [Block; 4] = [
        Block::ObjectsRatio,
        Block::PlacesRatio,
        Block::ExpressionsRatio,
        Block::EmotionsRatio,
    ];

    pub fn dim(self) -> usize {
        match self {
            Block::Topic => TOPICS,
            Block::Sentiment => SENTIMENTS,
            Block::AvgHue | Block::MedianHue => 3,
            Block::FlowHist => FLOW_BINS,
            Block::CommonWordHash => HASH_BUCKETS,
            Block::ObjectsRatio => 80,
            Block::PlacesRatio => 365,
            Block::ExpressionsRatio => 8,
            Block::EmotionsRatio => 26,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::Topic => "topic",
            Block::Sentiment => "sentiment",
            Block::Exciting => "exciting",
            Block::Funny => "funny",
            Block::Language => "language",
            Block::AvgHue => "avg_hue",
            Block::MedianHue => "median_hue",
            Block::AvgIntensity => "avg_intensity",
            Block::IntensityMid30 => "intensity_mid30",
            Block::IntensityMid60 => "intensity_mid60",
            Block::ShotBoundaries => "shot_boundaries",
            Block::FlowHist => "flow_hist",
            Block::Memorability => "memorability",
            Block::Duration => "duration",
            Block::TextLength => "text_length",
            Block::WordCount => "word_count",
            Block::MeaningfulWordCount => "meaningful_word_count",
            Block::AvgWordLength => "avg_word_length",
            Block::AvgSentenceLength => "avg_sentence_length",
            Block::SentimentPolarity => "sentiment_polarity",
            Block::CommonWordHash => "common_word_hash",
            Block::AudioLoudness => "audio_loudness",
            Block::ClimaxCount => "climax_count",
            Block::ObjectsRatio => "objects_ratio",
            Block::PlacesRatio => "places_ratio",
            Block::ExpressionsRatio => "expressions_ratio",
            Block::EmotionsRatio => "emotions_ratio",
        }
    }
}

pub fn one_hot(index: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[index] = 1.0;
    v
}

/// Everything extracted for one video, as stored in its feature file.
/// Detection counts are kept raw so the prior-ratio blocks can be built
/// from whichever corpus the priors come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFeatures {
    pub format_version: u32,
    pub video_id: String,
    pub blocks: BTreeMap<Block, Vec<f64>>,
    pub detections: DetectionCounts,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub struct ExtractedParts<'a> {
    pub record: &'a CleanVideoRecord,
    pub visual: &'a VisualFeatureBlock,
    pub memorability: f64,
    pub text: &'a TextFeatureBlock,
    pub detections: DetectionCounts,
    pub audio_loudness: f64,
    pub climax_count: usize,
    pub warnings: Vec<String>,
}

impl VideoFeatures {
    pub fn assemble(parts: ExtractedParts<'_>) -> Self {
        let r = parts.record;
        let v = parts.visual;
        let t = parts.text;
        let scalar = |x: f64| vec![x];
        let blocks: BTreeMap<Block, Vec<f64>> = [
            (Block::Topic, one_hot(usize::from(r.topic), TOPICS)),
            (Block::Sentiment, one_hot(usize::from(r.sentiment), SENTIMENTS)),
            (Block::Exciting, scalar(f64::from(r.exciting))),
            (Block::Funny, scalar(f64::from(r.funny))),
            (Block::Language, scalar(f64::from(r.language))),
            (Block::AvgHue, v.avg_hue.to_vec()),
            (Block::MedianHue, v.median_hue.to_vec()),
            (Block::AvgIntensity, scalar(v.avg_intensity)),
            (Block::IntensityMid30, scalar(v.avg_intensity_mid30)),
            (Block::IntensityMid60, scalar(v.avg_intensity_mid60)),
            (Block::ShotBoundaries, scalar(v.shot_boundary_count as f64)),
            (Block::FlowHist, v.flow_hist.clone()),
            (Block::Memorability, scalar(parts.memorability)),
            (Block::Duration, scalar(r.duration_seconds)),
            (Block::TextLength, scalar(t.text_length as f64)),
            (Block::WordCount, scalar(t.word_count as f64)),
            (Block::MeaningfulWordCount, scalar(t.meaningful_word_count as f64)),
            (Block::AvgWordLength, scalar(t.avg_word_length)),
            (Block::AvgSentenceLength, scalar(t.avg_sentence_length)),
            (Block::SentimentPolarity, scalar(t.sentiment_polarity)),
            (Block::CommonWordHash, t.common_word_hash.clone()),
            (Block::AudioLoudness, scalar(parts.audio_loudness)),
            (Block::ClimaxCount, scalar(parts.climax_count as f64)),
        ]
        .into_iter()
        .collect();
        VideoFeatures {
            format_version: FEATURE_FILE_VERSION,
            video_id: r.video_id.clone(),
            blocks,
            detections: parts.detections,
            warnings: parts.warnings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FEATURE_FILE_VERSION {
            return Err(Error::invalid(format!(
                "{}: unsupported feature file version {}",
                self.video_id, self.format_version
            )));
        }
        for (block, values) in &self.blocks {
            if values.len() != block.dim() {
                return Err(Error::invalid(format!(
                    "{}: block {} has {} values, expected {}",
                    self.video_id,
                    block.name(),
                    values.len(),
                    block.dim()
                )));
            }
        }
        self.detections.validate()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: VideoFeatures = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        f.validate()?;
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn scalar(&self, block: Block) -> Option<f64> {
        self.blocks.get(&block).and_then(|v| v.first().copied())
    }

    /// Attach prior-ratio blocks computed against `priors`.
    pub fn materialize(&self, priors: &PriorTable) -> FeatureVector {
        let mut blocks = self.blocks.clone();
        for (block, ratios) in Block::RATIOS.into_iter().zip(ratio_block(&self.detections, priors)) {
            blocks.insert(block, ratios);
        }
        FeatureVector { blocks }
    }
}

/// All named blocks for one video, ready for the learners.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub blocks: BTreeMap<Block, Vec<f64>>,
}

impl FeatureVector {
    pub fn get(&self, block: Block) -> Result<&[f64]> {
        self.blocks
            .get(&block)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingFeatureBlock(block.name().to_string()))
    }

    /// Concatenate `blocks` in the given order.
    pub fn gather(&self, blocks: &[Block]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(blocks.iter().map(|b| b.dim()).sum());
        for &b in blocks {
            out.extend_from_slice(self.get(b)?);
        }
        Ok(out)
    }
}
