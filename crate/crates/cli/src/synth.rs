//! Synthetic project generator: raw records plus frame, transcript,
//! detection and memorability assets with a planted effectiveness signal.
//!
//! Each video gets a latent score from its topic, its duration and the
//! number of frame pairs in which something moves (which sets the entropy
//! of its optical-flow histogram). Effectiveness is the quintile of that
//! score, after which a fraction of labels is permuted among themselves.

use std::fs;
use std::path::{Path, PathBuf};

use adeffect_core::data_model::{write_jsonl, AnnotationSet, Assets, RawVideoRecord, SENTIMENTS, TOPICS};
use adeffect_core::detection_features::DetectionFile;
use adeffect_core::rng::{derive_seed, rng_from_seed, PipelineRng};
use adeffect_core::text_features::{Transcript, TranscriptSegment};
use adeffect_core::visual_features::{write_ppm, Frame, FlowParams, VisualParams};
use anyhow::{ensure, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Paths};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Signal {
    pub topic: f64,
    pub duration: f64,
    pub flow_entropy: f64,
    /// Standard deviation of Gaussian noise added to the latent score.
    pub noise: f64,
}

impl Default for Signal {
    fn default() -> Self {
        Signal {
            topic: 1.0,
            duration: 0.5,
            flow_entropy: 0.5,
            noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub videos_per_class: usize,
    pub seed: u64,
    pub topics: usize,
    pub signal: Signal,
    /// Fraction of videos whose labels are shuffled among themselves.
    pub label_noise: f64,
    pub frame_width: usize,
    pub frame_height: usize,
    /// Frames per video; 31 gives one frame pair per flow bin.
    pub frames: usize,
    /// Every n-th video gets no transcript (0 disables).
    pub drop_transcript_every: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            videos_per_class: 193,
            seed: 7,
            topics: TOPICS,
            signal: Signal::default(),
            label_noise: 0.2,
            frame_width: 24,
            frame_height: 16,
            frames: 31,
            drop_transcript_every: 0,
        }
    }
}

/// Per-video quantities the generator plants before rendering assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedVideo {
    pub video_id: String,
    pub topic: u8,
    pub sentiment: u8,
    pub duration_seconds: f64,
    /// Frame pairs with motion.
    pub moving_pairs: usize,
    pub effectiveness: u8,
}

fn gaussian(rng: &mut PipelineRng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| if sd > 0.0 { (x - mean) / sd } else { 0.0 }).collect()
}

/// Draw the latent quantities and labels for every video.
pub fn plant(spec: &SynthSpec) -> Result<Vec<PlantedVideo>> {
    ensure!(spec.videos_per_class > 0, "videos_per_class must be positive");
    ensure!((1..=TOPICS).contains(&spec.topics), "topics must be in 1..={TOPICS}");
    ensure!((0.0..=1.0).contains(&spec.label_noise), "label_noise must be in [0, 1]");
    ensure!(spec.frames >= 2, "need at least two frames");
    let n = spec.videos_per_class * 5;
    let pairs = spec.frames - 1;
    let mut rng = rng_from_seed(spec.seed);

    let topic_effect: Vec<f64> = (0..spec.topics).map(|_| gaussian(&mut rng)).collect();
    let mut topics: Vec<u8> = (0..n).map(|i| (i % spec.topics) as u8).collect();
    topics.shuffle(&mut rng);
    let sentiments: Vec<u8> = (0..n).map(|_| rng.gen_range(0..SENTIMENTS as u8)).collect();
    let durations: Vec<f64> = (0..n).map(|_| (rng.gen_range(5.0..60.0f64) * 10.0).round() / 10.0).collect();
    let moving: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=pairs)).collect();

    let topic_z = standardize(&topics.iter().map(|&t| topic_effect[usize::from(t)]).collect::<Vec<_>>());
    let duration_z = standardize(&durations);
    let entropy_z = standardize(&moving.iter().map(|&k| (k as f64).ln()).collect::<Vec<_>>());
    let s = spec.signal;
    let score: Vec<f64> = (0..n)
        .map(|i| s.topic * topic_z[i] + s.duration * duration_z[i] + s.flow_entropy * entropy_z[i] + s.noise * gaussian(&mut rng))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let mut labels = vec![0u8; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = (rank / spec.videos_per_class) as u8 + 1;
    }

    // Permuting a subset of labels keeps every class count unchanged.
    let mut noisy: Vec<usize> = (0..n).collect();
    noisy.shuffle(&mut rng);
    noisy.truncate((spec.label_noise * n as f64).round() as usize);
    let mut shuffled: Vec<u8> = noisy.iter().map(|&i| labels[i]).collect();
    shuffled.shuffle(&mut rng);
    for (&i, l) in noisy.iter().zip(shuffled) {
        labels[i] = l;
    }

    Ok((0..n)
        .map(|i| PlantedVideo {
            video_id: format!("v{i:04}"),
            topic: topics[i],
            sentiment: sentiments[i],
            duration_seconds: durations[i],
            moving_pairs: moving[i],
            effectiveness: labels[i],
        })
        .collect())
}

/// Five annotations whose mode is the planted value on every field.
fn annotations(v: &PlantedVideo, rng: &mut PipelineRng) -> Vec<AnnotationSet> {
    let exciting = rng.gen_range(0..2u8);
    let funny = rng.gen_range(0..2u8);
    let language = rng.gen_range(-1..=1i8);
    (0..5)
        .map(|k| {
            if k < 3 {
                AnnotationSet {
                    effectiveness: v.effectiveness,
                    topic: v.topic,
                    sentiment: v.sentiment,
                    exciting,
                    funny,
                    language,
                }
            } else {
                AnnotationSet {
                    effectiveness: rng.gen_range(1..=5),
                    topic: rng.gen_range(0..TOPICS as u8),
                    sentiment: rng.gen_range(0..SENTIMENTS as u8),
                    exciting: rng.gen_range(0..2),
                    funny: rng.gen_range(0..2),
                    language: rng.gen_range(-1..=1),
                }
            }
        })
        .collect()
}

/// A periodic texture with a bright stripe, panned 2 px during the chosen
/// frame pairs and still otherwise.
fn render_frames(spec: &SynthSpec, v: &PlantedVideo, rng: &mut PipelineRng) -> Vec<Frame> {
    let (w, h) = (spec.frame_width, spec.frame_height);
    let base: [u8; 3] = [rng.gen_range(0..120), rng.gen_range(0..120), rng.gen_range(0..120)];
    let stripe: [u8; 3] = [rng.gen_range(180..=255), rng.gen_range(180..=255), rng.gen_range(180..=255)];
    let pairs = spec.frames - 1;
    let mut active: Vec<usize> = (0..pairs).collect();
    active.shuffle(rng);
    let mut moves = vec![false; pairs];
    for &p in &active[..v.moving_pairs.min(pairs)] {
        moves[p] = true;
    }

    let mut offset = 0usize;
    let mut frames = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let mut frame = Frame::solid(w, h, base);
        for y in 0..h {
            for x in 0..w {
                let u = (x + offset) % 23;
                let px = if u < 3 {
                    stripe
                } else {
                    let t = ((u * 7 + y * 13) % 23) as u8 * 3;
                    [base[0] + t, base[1] + t, base[2] + t]
                };
                frame.set_pixel(x, y, px);
            }
        }
        frames.push(frame);
        if moves.get(f).copied().unwrap_or(false) {
            offset += 2;
        }
    }
    frames
}

const WORDS: [&str; 16] = [
    "great", "new", "car", "phone", "coffee", "fresh", "save", "today", "best", "deal", "fast", "bad", "free",
    "family", "happy", "sale",
];

fn transcript(rng: &mut PipelineRng) -> Transcript {
    let segments = rng.gen_range(1..=4);
    Transcript {
        sampled_frames: (0..segments)
            .map(|k| {
                let words: Vec<&str> = (0..rng.gen_range(1..8)).map(|_| *WORDS.choose(rng).expect("words")).collect();
                TranscriptSegment {
                    frame: k * 60,
                    text: format!("{}.", words.join(" ")),
                }
            })
            .collect(),
    }
}

fn detections(rng: &mut PipelineRng) -> DetectionFile {
    let mut draw = |vocab: usize, max: usize| -> Vec<usize> {
        (0..rng.gen_range(1..=max)).map(|_| rng.gen_range(0..vocab.min(6))).collect()
    };
    let objects = draw(80, 20);
    let places = draw(365, 10);
    let expressions = draw(8, 5);
    let emotions = draw(26, 10);
    DetectionFile {
        objects,
        places,
        expressions,
        emotions,
        audio: (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        climaxes: (0..rng.gen_range(0..4)).map(|k| f64::from(k) * 2.5).collect(),
    }
}

fn statement(rng: &mut PipelineRng) -> String {
    let action: Vec<&str> = (0..rng.gen_range(1..5)).map(|_| *WORDS.choose(rng).expect("words")).collect();
    let reason: Vec<&str> = (0..rng.gen_range(1..7)).map(|_| *WORDS.choose(rng).expect("words")).collect();
    format!("I should buy {} because {}", action.join(" "), reason.join(" "))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string(value)?).with_context(|| format!("writing {}", path.display()))
}

/// Write a complete project into `dir` and return its config path.
pub fn generate_project(dir: &Path, spec: &SynthSpec) -> Result<PathBuf> {
    let planted = plant(spec)?;
    let assets_dir = dir.join("assets");
    fs::create_dir_all(&assets_dir).with_context(|| format!("creating {}", assets_dir.display()))?;

    let mut records = Vec::with_capacity(planted.len());
    for (i, v) in planted.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(spec.seed, i as u64 + 1));
        let rel = PathBuf::from(&v.video_id);
        let video_dir = assets_dir.join(&rel);
        let frames_dir = video_dir.join("frames");
        fs::create_dir_all(&frames_dir).with_context(|| format!("creating {}", frames_dir.display()))?;
        for (k, frame) in render_frames(spec, v, &mut rng).iter().enumerate() {
            write_ppm(&frames_dir.join(format!("{k:03}.ppm")), frame)?;
        }
        let scores: String = (0..spec.frames).map(|_| format!("{}\n", rng.gen_range(0.3..0.9f64))).collect();
        fs::write(video_dir.join("memorability.txt"), scores)?;
        write_json(&video_dir.join("detections.json"), &detections(&mut rng))?;

        let with_transcript = spec.drop_transcript_every == 0 || (i + 1) % spec.drop_transcript_every != 0;
        let t = transcript(&mut rng);
        if with_transcript {
            write_json(&video_dir.join("transcript.json"), &t)?;
        }
        let ratings = annotations(v, &mut rng);
        let statements = (0..5).map(|_| statement(&mut rng)).collect();
        records.push(RawVideoRecord {
            video_id: v.video_id.clone(),
            ratings,
            duration_seconds: v.duration_seconds,
            assets: Assets {
                frames: Some(rel.join("frames")),
                transcript: with_transcript.then(|| rel.join("transcript.json")),
                detections: Some(rel.join("detections.json")),
                memorability: Some(rel.join("memorability.txt")),
                audio: None,
            },
            statements,
        });
    }
    write_jsonl(&dir.join("raw.jsonl"), &records)?;

    let config = Config {
        paths: Paths {
            raw_records: "raw.jsonl".into(),
            assets_root: "assets".into(),
            output_dir: "out".into(),
        },
        visual: VisualParams {
            flow: FlowParams {
                block_size: 8,
                search_radius: 3,
            },
            shot_threshold: 0.4,
        },
        extremes_k: (spec.videos_per_class * 5 / 10).max(1),
        ..Config::default()
    };
    let path = dir.join("config.json");
    let mut text = serde_json::to_string_pretty(&config)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_labels_are_balanced() {
        let spec = SynthSpec {
            videos_per_class: 12,
            ..SynthSpec::default()
        };
        let videos = plant(&spec).unwrap();
        assert_eq!(videos.len(), 60);
        for e in 1..=5 {
            assert_eq!(videos.iter().filter(|v| v.effectiveness == e).count(), 12);
        }
        assert_eq!(plant(&spec).unwrap(), videos);
    }

    #[test]
    fn noiseless_topic_signal_is_a_function_of_topic() {
        let spec = SynthSpec {
            videos_per_class: 8,
            topics: 5,
            signal: Signal {
                topic: 1.0,
                duration: 0.0,
                flow_entropy: 0.0,
                noise: 0.0,
            },
            label_noise: 0.0,
            ..SynthSpec::default()
        };
        let videos = plant(&spec).unwrap();
        for v in &videos {
            let same = videos.iter().filter(|w| w.topic == v.topic);
            assert!(same.clone().all(|w| w.effectiveness == v.effectiveness));
        }
    }

    #[test]
    fn mode_of_annotations_is_planted() {
        let v = PlantedVideo {
            video_id: "x".into(),
            topic: 4,
            sentiment: 9,
            duration_seconds: 3.0,
            moving_pairs: 2,
            effectiveness: 2,
        };
        let raw = RawVideoRecord {
            video_id: "x".into(),
            ratings: annotations(&v, &mut rng_from_seed(3)),
            duration_seconds: 3.0,
            assets: Assets::default(),
            statements: vec![],
        };
        let clean = adeffect_core::data_model::CleanVideoRecord::from_raw(&raw).unwrap();
        assert_eq!((clean.effectiveness, clean.topic, clean.sentiment), (2, 4, 9));
    }
}
