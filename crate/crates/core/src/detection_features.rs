//! Prior-ratio features from upstream detector output.
//!
//! A video's label distribution within each detection family is divided
//! elementwise by the corpus prior for that family, so 1.0 means "as often
//! as average".

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Objects,
    Places,
    Expressions,
    Emotions,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Objects, Family::Places, Family::Expressions, Family::Emotions];

    pub fn vocabulary(self) -> usize {
        match self {
            Family::Objects => 80,
            Family::Places => 365,
            Family::Expressions => 8,
            Family::Emotions => 26,
        }
    }
}

/// Raw detector output for one video.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionFile {
    #[serde(default)]
    pub objects: Vec<usize>,
    #[serde(default)]
    pub places: Vec<usize>,
    #[serde(default)]
    pub expressions: Vec<usize>,
    #[serde(default)]
    pub emotions: Vec<usize>,
    #[serde(default)]
    pub audio: Vec<f64>,
    #[serde(default)]
    pub climaxes: Vec<f64>,
}

impl DetectionFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: DetectionFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        file.validate()
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn labels(&self, family: Family) -> &[usize] {
        match family {
            Family::Objects => &self.objects,
            Family::Places => &self.places,
            Family::Expressions => &self.expressions,
            Family::Emotions => &self.emotions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for family in Family::ALL {
            if let Some(&bad) = self.labels(family).iter().find(|&&l| l >= family.vocabulary()) {
                return Err(Error::invalid(format!(
                    "{family:?} label {bad} outside vocabulary of {}",
                    family.vocabulary()
                )));
            }
        }
        Ok(())
    }

    pub fn counts(&self) -> Result<DetectionCounts> {
        self.validate()?;
        let mut counts = DetectionCounts::empty();
        for family in Family::ALL {
            let slot = counts.family_mut(family);
            for &label in self.labels(family) {
                slot[label] += 1;
            }
        }
        Ok(counts)
    }
}

/// Per-family label histograms. Each array element of a detection file is
/// one detection event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub objects: Vec<u64>,
    pub places: Vec<u64>,
    pub expressions: Vec<u64>,
    pub emotions: Vec<u64>,
}

impl DetectionCounts {
    pub fn empty() -> Self {
        DetectionCounts {
            objects: vec![0; Family::Objects.vocabulary()],
            places: vec![0; Family::Places.vocabulary()],
            expressions: vec![0; Family::Expressions.vocabulary()],
            emotions: vec![0; Family::Emotions.vocabulary()],
        }
    }

    pub fn family(&self, family: Family) -> &[u64] {
        match family {
            Family::Objects => &self.objects,
            Family::Places => &self.places,
            Family::Expressions => &self.expressions,
            Family::Emotions => &self.emotions,
        }
    }

    fn family_mut(&mut self, family: Family) -> &mut Vec<u64> {
        match family {
            Family::Objects => &mut self.objects,
            Family::Places => &mut self.places,
            Family::Expressions => &mut self.expressions,
            Family::Emotions => &mut self.emotions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for family in Family::ALL {
            let got = self.family(family).len();
            if got != family.vocabulary() {
                return Err(Error::DimensionMismatch {
                    expected: family.vocabulary(),
                    got,
                });
            }
        }
        Ok(())
    }
}

/// Corpus-level label counts, pooled over the videos the priors were
/// computed from. Probabilities are derived on demand so ratios can be
/// formed from integers with a single rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorTable {
    pub pooled: DetectionCounts,
}

impl PriorTable {
    /// Label probabilities of one family; all zero if it saw no detections.
    pub fn family(&self, family: Family) -> Vec<f64> {
        distribution(self.pooled.family(family))
    }
}

fn distribution(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Pool detections over `videos` (in the given order) and normalise each
/// family. Families with no detections get the zero vector.
pub fn compute_priors<'a>(videos: impl IntoIterator<Item = &'a DetectionCounts>) -> PriorTable {
    let mut pooled = DetectionCounts::empty();
    for v in videos {
        for family in Family::ALL {
            for (acc, &c) in pooled.family_mut(family).iter_mut().zip(v.family(family)) {
                *acc += c;
            }
        }
    }
    PriorTable { pooled }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFeatureBlock {
    pub objects_ratio: Vec<f64>,
    pub places_ratio: Vec<f64>,
    pub expressions_ratio: Vec<f64>,
    pub emotions_ratio: Vec<f64>,
    pub audio_loudness: f64,
    pub climax_count: usize,
}

/// `(c / n) / (p / t)` for video counts `c` (total `n`) against pooled
/// counts `p` (total `t`), evaluated as `(c * t) / (n * p)`. Zero where the
/// prior or the video's family is empty.
pub fn family_ratio(counts: &[u64], pooled: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    let t: u64 = pooled.iter().sum();
    counts
        .iter()
        .zip(pooled)
        .map(|(&c, &p)| {
            if p == 0 || n == 0 {
                0.0
            } else {
                (u128::from(c) * u128::from(t)) as f64 / (u128::from(n) * u128::from(p)) as f64
            }
        })
        .collect()
}

pub fn ratio_block(counts: &DetectionCounts, priors: &PriorTable) -> [Vec<f64>; 4] {
    Family::ALL.map(|f| family_ratio(counts.family(f), priors.pooled.family(f)))
}

/// Mean absolute amplitude; a silent or missing track is 0.
pub fn audio_loudness(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.abs()).sum::<f64>() / samples.len() as f64
}

pub fn ratio_features(video: &DetectionFile, priors: &PriorTable) -> Result<DetectionFeatureBlock> {
    let [objects_ratio, places_ratio, expressions_ratio, emotions_ratio] = ratio_block(&video.counts()?, priors);
    Ok(DetectionFeatureBlock {
        objects_ratio,
        places_ratio,
        expressions_ratio,
        emotions_ratio,
        audio_loudness: audio_loudness(&video.audio),
        climax_count: video.climaxes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PERSON: usize = 0;

    fn objects(labels: Vec<usize>) -> DetectionFile {
        DetectionFile {
            objects: labels,
            ..Default::default()
        }
    }

    #[test]
    fn prior_from_worked_example() {
        let mut labels = vec![PERSON; 800];
        labels.extend(std::iter::repeat_n(1, 200));
        let priors = compute_priors([&objects(labels).counts().unwrap()]);
        assert_eq!(priors.family(Family::Objects)[PERSON], 0.8);
        assert!(priors.family(Family::Places).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn prior_examples() {
        let one = compute_priors([&objects(vec![7]).counts().unwrap()]);
        let expected: Vec<f64> = (0..80).map(|k| if k == 7 { 1.0 } else { 0.0 }).collect();
        assert_eq!(one.family(Family::Objects), expected);

        let even = compute_priors([&objects(vec![3, 5]).counts().unwrap()]);
        assert_eq!(even.family(Family::Objects)[3], 0.5);
        assert_eq!(even.family(Family::Objects)[5], 0.5);
    }

    #[test]
    fn ratio_from_worked_example() {
        // Prior 0.8 for person, video with person 60% of the time.
        let mut prior = vec![0u64; 80];
        prior[PERSON] = 8;
        prior[1] = 2;
        let mut video = vec![0u64; 80];
        video[PERSON] = 6;
        video[1] = 4;
        let ratio = family_ratio(&video, &prior);
        assert_eq!(ratio[PERSON], 0.75);
        assert!((ratio[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_examples() {
        let file = objects(vec![1, 1, 2, 3]);
        let priors = compute_priors([&file.counts().unwrap()]);
        let block = ratio_features(&file, &priors).unwrap();
        for k in [1, 2, 3] {
            assert!((block.objects_ratio[k] - 1.0).abs() < 1e-12);
        }
        assert_eq!(block.objects_ratio[0], 0.0);
        assert!(block.places_ratio.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn audio_and_climaxes() {
        let file = DetectionFile {
            audio: vec![0.5, -0.5, 1.0, -1.0],
            climaxes: vec![3.0, 9.5],
            ..Default::default()
        };
        let priors = compute_priors([&file.counts().unwrap()]);
        let block = ratio_features(&file, &priors).unwrap();
        assert_eq!(block.audio_loudness, 0.75);
        assert_eq!(block.climax_count, 2);
        assert_eq!(audio_loudness(&[0.0; 10]), 0.0);
    }

    #[test]
    fn out_of_vocabulary_rejected() {
        assert!(objects(vec![80]).counts().is_err());
        let bad = DetectionFile {
            expressions: vec![8],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn detection_json() {
        let f: DetectionFile = serde_json::from_str(r#"{"objects":[1,2],"audio":[0.1],"climaxes":[]}"#).unwrap();
        assert_eq!(f.objects, [1, 2]);
        assert!(f.places.is_empty());
    }

    fn counts_strategy() -> impl Strategy<Value = DetectionCounts> {
        (
            proptest::collection::vec(0u64..6, 80),
            proptest::collection::vec(0u64..3, 365),
            proptest::collection::vec(0u64..9, 8),
            proptest::collection::vec(0u64..9, 26),
        )
            .prop_map(|(objects, places, expressions, emotions)| DetectionCounts {
                objects,
                places,
                expressions,
                emotions,
            })
    }

    proptest! {
        #[test]
        fn priors_sum_to_one(videos in proptest::collection::vec(counts_strategy(), 1..5)) {
            let priors = compute_priors(&videos);
            for f in Family::ALL {
                let total: u64 = videos.iter().map(|v| v.family(f).iter().sum::<u64>()).sum();
                let s: f64 = priors.family(f).iter().sum();
                if total > 0 {
                    prop_assert!((s - 1.0).abs() < 1e-12);
                } else {
                    prop_assert_eq!(s, 0.0);
                }
            }
        }

        #[test]
        fn ratios_scale_invariant(videos in proptest::collection::vec(counts_strategy(), 2..4), k in 2u64..50) {
            let priors = compute_priors(&videos);
            let v = &videos[0];
            let scaled = DetectionCounts {
                objects: v.objects.iter().map(|c| c * k).collect(),
                places: v.places.iter().map(|c| c * k).collect(),
                expressions: v.expressions.iter().map(|c| c * k).collect(),
                emotions: v.emotions.iter().map(|c| c * k).collect(),
            };
            let a = ratio_block(v, &priors);
            let b = ratio_block(&scaled, &priors);
            for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                prop_assert!(*x >= 0.0);
            }
        }
    }
}
