//! Statistics over OCR transcripts.
//!
//! Tokens are lowercase alphanumeric runs. A *meaningful* word is a token
//! that is purely alphabetic, at least three characters long and absent
//! from the bundled stopword list; meaningful words are compared by their
//! Porter stem.

mod porter;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::stem;

pub const HASH_BUCKETS: usize = 32;

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const POSITIVE: &str = include_str!("../../data/positive_words.txt");
const NEGATIVE: &str = include_str!("../../data/negative_words.txt");

fn word_set(list: &'static str) -> HashSet<&'static str> {
    list.lines().map(str::trim).filter(|w| !w.is_empty()).collect()
}

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| word_set(STOPWORDS))
}

fn positive_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| word_set(POSITIVE))
}

fn negative_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| word_set(NEGATIVE))
}

/// OCR text sampled from individual frames.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub sampled_frames: Vec<TranscriptSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub frame: u64,
    pub text: String,
}

impl Transcript {
    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        let t: Transcript = serde_json::from_str(json)?;
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t = Self::from_json(&text).map_err(|e| Error::json(path, e))?;
        if t.sampled_frames.windows(2).any(|w| w[0].frame >= w[1].frame) {
            return Err(Error::invalid(format!(
                "{}: frame indices must be strictly increasing",
                path.display()
            )));
        }
        Ok(t)
    }

    /// Segment texts joined by newlines, in frame order.
    pub fn full_text(&self) -> String {
        self.sampled_frames
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn tokenize(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_meaningful(token: &str) -> bool {
    token.chars().count() >= 3
        && token.chars().all(char::is_alphabetic)
        && !stopwords().contains(token)
}

/// Stems of the meaningful tokens, in order.
pub fn meaningful_words<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| is_meaningful(t))
        .map(stem)
        .collect()
}

/// 64-bit FNV-1a over the UTF-8 bytes.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `(positive - negative) / max(1, positive + negative)` over lexicon hits.
pub fn polarity<S: AsRef<str>>(tokens: &[S]) -> f64 {
    let (mut pos, mut neg) = (0usize, 0usize);
    for t in tokens {
        let t = t.as_ref();
        if positive_words().contains(t) {
            pos += 1;
        } else if negative_words().contains(t) {
            neg += 1;
        }
    }
    (pos as f64 - neg as f64) / (pos + neg).max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextFeatureBlock {
    pub text_length: usize,
    pub word_count: usize,
    pub meaningful_word_count: usize,
    pub avg_word_length: f64,
    pub avg_sentence_length: f64,
    pub sentiment_polarity: f64,
    pub common_word_hash: Vec<f64>,
}

impl TextFeatureBlock {
    pub fn zero() -> Self {
        TextFeatureBlock {
            text_length: 0,
            word_count: 0,
            meaningful_word_count: 0,
            avg_word_length: 0.0,
            avg_sentence_length: 0.0,
            sentiment_polarity: 0.0,
            common_word_hash: vec![0.0; HASH_BUCKETS],
        }
    }
}

pub fn text_block(transcript: &Transcript) -> TextFeatureBlock {
    let text = transcript.full_text();
    let tokens = tokenize(&text);
    if tokens.is_empty() {
        return TextFeatureBlock {
            text_length: text.chars().count(),
            ..TextFeatureBlock::zero()
        };
    }

    let sentences: Vec<usize> = text
        .split(['.', '!', '?', '\n'])
        .map(|s| tokenize(s).len())
        .filter(|&n| n > 0)
        .collect();

    let surface: Vec<&String> = tokens.iter().filter(|t| is_meaningful(t)).collect();
    let avg_word_length = if surface.is_empty() {
        0.0
    } else {
        surface.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / surface.len() as f64
    };

    let stems = meaningful_words(&tokens);
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &stems {
        *freq.entry(s).or_default() += 1;
    }
    let mut common_word_hash = vec![0.0; HASH_BUCKETS];
    // Ascending key order plus strict comparison keeps the
    // lexicographically first word among equally frequent ones.
    let mut best: Option<(&str, usize)> = None;
    for (word, count) in freq {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((word, count));
        }
    }
    if let Some((word, _)) = best {
        common_word_hash[(fnv1a64(word) % HASH_BUCKETS as u64) as usize] = 1.0;
    }

    TextFeatureBlock {
        text_length: text.chars().count(),
        word_count: tokens.len(),
        meaningful_word_count: stems.len(),
        avg_word_length,
        avg_sentence_length: tokens.len() as f64 / sentences.len() as f64,
        sentiment_polarity: polarity(&tokens),
        common_word_hash,
    }
}

/// Split an "action because reason" statement and count tokens in each half.
/// Statements without "because" count entirely as action.
pub fn action_reason_lengths(statement: &str) -> (usize, usize) {
    let tokens = tokenize(statement);
    match tokens.iter().position(|t| t == "because") {
        Some(i) => (i, tokens.len() - i - 1),
        None => (tokens.len(), 0),
    }
}
