//! Per-topic / per-sentiment routed ensemble over the 25 base classifiers.
//!
//! Each classifier's training accuracy is tabulated per topic and per
//! sentiment. A test video is handed to the classifier with the best
//! accuracy on its topic or its sentiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_model::{SENTIMENTS, TOPICS};
use crate::error::{Error, Result};
use crate::features::{Block, FeatureVector};
use crate::learners::{ClassifierKind, TrainedClassifier};

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

/// A base classifier's row: learner family, display name and the feature
/// blocks it reads, concatenated in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub feature: String,
    pub blocks: Vec<Block>,
}

impl ClassifierSpec {
    fn new(kind: ClassifierKind, feature: &str, blocks: &[Block]) -> Self {
        ClassifierSpec {
            kind,
            feature: feature.to_string(),
            blocks: blocks.to_vec(),
        }
    }

    /// Stable identifier such as `svm_optical_flow`.
    pub fn key(&self) -> String {
        let kind = match self.kind {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Tree => "tree",
            ClassifierKind::Logreg => "logreg",
        };
        let feature: String = self
            .feature
            .to_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        format!("{kind}_{}", feature.trim_matches('_').replace("__", "_"))
    }
}

/// Index of the all-features SVM in [`standard_classifiers`].
pub const FALLBACK_INDEX: usize = 20;

/// The 25 classifiers in reporting order.
pub fn standard_classifiers() -> Vec<ClassifierSpec> {
    use Block::*;
    use ClassifierKind::{Logreg, Svm, Tree};
    let svm = |name: &str, blocks: &[Block]| ClassifierSpec::new(Svm, name, blocks);
    vec![
        svm("Topics", &[Topic]),
        svm("Sentiments", &[Sentiment]),
        svm("Memorability", &[Memorability]),
        svm("Optical Flow", &[FlowHist]),
        svm("Cropped 30%", &[IntensityMid30]),
        svm("Cropped 60%", &[IntensityMid60]),
        svm("Average Hue", &[AvgHue]),
        svm("Median Hue", &[MedianHue]),
        svm("Duration", &[Duration]),
        svm("Text Length", &[TextLength]),
        svm("Meaningful Words", &[MeaningfulWordCount]),
        svm("Average Word Length", &[AvgWordLength]),
        svm("Word Count", &[WordCount]),
        svm("Sentiment Analysis", &[SentimentPolarity]),
        svm("Audio", &[AudioLoudness]),
        svm("Objects", &[ObjectsRatio]),
        svm("Places", &[PlacesRatio]),
        svm("Expressions", &[ExpressionsRatio]),
        svm("Emotions", &[EmotionsRatio]),
        svm("Climax", &[ClimaxCount]),
        svm("All Features Aggregated", &Block::ALL),
        svm("All Text Features Aggregated", &Block::TEXT),
        ClassifierSpec::new(Tree, "Topics", &[Topic]),
        ClassifierSpec::new(Tree, "Sentiments", &[Sentiment]),
        ClassifierSpec::new(Logreg, "Exciting", &[Exciting]),
    ]
}

/// Correct and total counts per (classifier, bin).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinTable {
    pub correct: Vec<Vec<u32>>,
    pub total: Vec<Vec<u32>>,
}

impl BinTable {
    pub fn new(classifiers: usize, bins: usize) -> Self {
        BinTable {
            correct: vec![vec![0; bins]; classifiers],
            total: vec![vec![0; bins]; classifiers],
        }
    }

    pub fn classifiers(&self) -> usize {
        self.total.len()
    }

    pub fn bins(&self) -> usize {
        self.total.first().map_or(0, Vec::len)
    }

    /// `None` marks a bin with no training samples.
    pub fn accuracy(&self, classifier: usize, bin: usize) -> Option<f64> {
        let total = self.total[classifier][bin];
        (total > 0).then(|| f64::from(self.correct[classifier][bin]) / f64::from(total))
    }

    pub fn accuracies(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.classifiers())
            .map(|i| (0..self.bins()).map(|b| self.accuracy(i, b)).collect())
            .collect()
    }

    fn validate(&self, bins: usize) -> Result<()> {
        let shape_ok = self.correct.len() == self.total.len()
            && self.total.iter().chain(&self.correct).all(|row| row.len() == bins)
            && self
                .correct
                .iter()
                .flatten()
                .zip(self.total.iter().flatten())
                .all(|(c, t)| c <= t);
        if shape_ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("malformed accuracy table (expected {bins} bins)")))
        }
    }
}

/// Tabulate per-topic and per-sentiment accuracy. `predictions[i][n]` is
/// classifier `i`'s prediction for training sample `n`.
pub fn fit_bins(
    predictions: &[Vec<usize>],
    truth: &[usize],
    topics: &[u8],
    sentiments: &[u8],
) -> Result<(BinTable, BinTable)> {
    let n = truth.len();
    if n == 0 {
        return Err(Error::invalid("cannot fit accuracy bins on an empty training set"));
    }
    if topics.len() != n || sentiments.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: topics.len().min(sentiments.len()),
        });
    }
    if let Some(bad) = topics.iter().find(|&&t| usize::from(t) >= TOPICS) {
        return Err(Error::invalid(format!("topic {bad} out of range")));
    }
    if let Some(bad) = sentiments.iter().find(|&&s| usize::from(s) >= SENTIMENTS) {
        return Err(Error::invalid(format!("sentiment {bad} out of range")));
    }
    let mut topic = BinTable::new(predictions.len(), TOPICS);
    let mut sentiment = BinTable::new(predictions.len(), SENTIMENTS);
    for (i, preds) in predictions.iter().enumerate() {
        if preds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: preds.len(),
            });
        }
        for (k, (&p, &y)) in preds.iter().zip(truth).enumerate() {
            let hit = u32::from(p == y);
            let (t, s) = (usize::from(topics[k]), usize::from(sentiments[k]));
            topic.total[i][t] += 1;
            topic.correct[i][t] += hit;
            sentiment.total[i][s] += 1;
            sentiment.correct[i][s] += hit;
        }
    }
    Ok((topic, sentiment))
}

/// Smallest index maximising `max(topic_acc[i][topic], sent_acc[i][sentiment])`,
/// with unseen bins scoring -1. Falls back when nothing was seen.
pub fn select_classifier(
    topic_acc: &[Vec<Option<f64>>],
    sent_acc: &[Vec<Option<f64>>],
    topic: usize,
    sentiment: usize,
    fallback: usize,
) -> usize {
    const UNSEEN: f64 = -1.0;
    let mut best = (fallback, UNSEEN);
    for (i, (t, s)) in topic_acc.iter().zip(sent_acc).enumerate() {
        let score = t[topic].unwrap_or(UNSEEN).max(s[sentiment].unwrap_or(UNSEEN));
        if score > best.1 {
            best = (i, score);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub specs: Vec<ClassifierSpec>,
    pub classifiers: Vec<TrainedClassifier>,
    pub topic_bins: BinTable,
    pub sentiment_bins: BinTable,
    pub fallback_index: usize,
    topic_acc: Vec<Vec<Option<f64>>>,
    sent_acc: Vec<Vec<Option<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    fallback_index: usize,
    classifiers: Vec<ManifestEntry>,
    topic_bins: BinTable,
    sentiment_bins: BinTable,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    #[serde(flatten)]
    spec: ClassifierSpec,
    model_file: String,
}

impl EnsembleModel {
    pub fn new(
        specs: Vec<ClassifierSpec>,
        classifiers: Vec<TrainedClassifier>,
        topic_bins: BinTable,
        sentiment_bins: BinTable,
        fallback_index: usize,
    ) -> Result<Self> {
        let n = classifiers.len();
        if n == 0 || specs.len() != n {
            return Err(Error::invalid(format!("{} specs for {n} classifiers", specs.len())));
        }
        if fallback_index >= n {
            return Err(Error::invalid(format!("fallback index {fallback_index} out of range")));
        }
        for (spec, c) in specs.iter().zip(&classifiers) {
            let dim: usize = spec.blocks.iter().map(|b| b.dim()).sum();
            if spec.kind != c.kind || dim != c.n_features {
                return Err(Error::invalid(format!("classifier {} does not match its binding", spec.key())));
            }
        }
        topic_bins.validate(TOPICS)?;
        sentiment_bins.validate(SENTIMENTS)?;
        if topic_bins.classifiers() != n || sentiment_bins.classifiers() != n {
            return Err(Error::invalid("accuracy tables do not match the classifier count"));
        }
        Ok(EnsembleModel {
            topic_acc: topic_bins.accuracies(),
            sent_acc: sentiment_bins.accuracies(),
            specs,
            classifiers,
            topic_bins,
            sentiment_bins,
            fallback_index,
        })
    }

    pub fn topic_accuracy(&self) -> &[Vec<Option<f64>>] {
        &self.topic_acc
    }

    pub fn sentiment_accuracy(&self) -> &[Vec<Option<f64>>] {
        &self.sent_acc
    }

    pub fn select(&self, topic: u8, sentiment: u8) -> usize {
        select_classifier(
            &self.topic_acc,
            &self.sent_acc,
            usize::from(topic),
            usize::from(sentiment),
            self.fallback_index,
        )
    }

    pub fn predict(&self, features: &FeatureVector, topic: u8, sentiment: u8) -> Result<usize> {
        if usize::from(topic) >= TOPICS || usize::from(sentiment) >= SENTIMENTS {
            return Err(Error::invalid(format!("topic {topic} / sentiment {sentiment} out of range")));
        }
        let c = self.select(topic, sentiment);
        let x = features.gather(&self.specs[c].blocks)?;
        self.classifiers[c].predict(&x)
    }

    /// Write `ensemble.json` plus one model file per classifier into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.specs.len());
        for (i, (spec, model)) in self.specs.iter().zip(&self.classifiers).enumerate() {
            let file = format!("{i:02}_{}.json", spec.key());
            model.save(&dir.join(&file))?;
            entries.push(ManifestEntry {
                spec: spec.clone(),
                model_file: file,
            });
        }
        let manifest = Manifest {
            format_version: ENSEMBLE_FORMAT_VERSION,
            fallback_index: self.fallback_index,
            classifiers: entries,
            topic_bins: self.topic_bins.clone(),
            sentiment_bins: self.sentiment_bins.clone(),
        };
        let path = dir.join("ensemble.json");
        let mut text = serde_json::to_string(&manifest).map_err(|e| Error::json(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("ensemble.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        if manifest.format_version != ENSEMBLE_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "{}: unsupported ensemble version {}",
                path.display(),
                manifest.format_version
            )));
        }
        let mut specs = Vec::new();
        let mut classifiers = Vec::new();
        for entry in manifest.classifiers {
            classifiers.push(TrainedClassifier::load(&dir.join(&entry.model_file))?);
            specs.push(entry.spec);
        }
        EnsembleModel::new(
            specs,
            classifiers,
            manifest.topic_bins,
            manifest.sentiment_bins,
            manifest.fallback_index,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ModelParams, TreeNode, TreeParams, LearnerParams, MODEL_FORMAT_VERSION};
    use proptest::prelude::*;

    #[test]
    fn twenty_five_rows() {
        let specs = standard_classifiers();
        assert_eq!(specs.len(), 25);
        assert_eq!(specs.iter().filter(|s| s.kind == ClassifierKind::Svm).count(), 22);
        assert_eq!(specs[FALLBACK_INDEX].feature, "All Features Aggregated");
        assert_eq!(specs[FALLBACK_INDEX].blocks.len(), Block::ALL.len());
        assert_eq!(specs[3].key(), "svm_optical_flow");
        assert_eq!(specs[4].key(), "svm_cropped_30");
        assert_eq!(specs[24].key(), "logreg_exciting");
        let keys: std::collections::BTreeSet<String> = specs.iter().map(ClassifierSpec::key).collect();
        assert_eq!(keys.len(), 25);
    }

    #[test]
    fn bins_from_counts() {
        // Classifier 0 always right; classifier 1 right on 2 of 4 topic-7 samples.
        let truth = vec![0, 1, 0, 1, 2];
        let topics = vec![7, 7, 7, 7, 3];
        let sentiments = vec![0, 0, 1, 1, 2];
        let preds = vec![truth.clone(), vec![0, 0, 1, 1, 2]];
        let (t, s) = fit_bins(&preds, &truth, &topics, &sentiments).unwrap();
        assert_eq!(t.accuracy(0, 7), Some(1.0));
        assert_eq!(t.accuracy(0, 3), Some(1.0));
        assert_eq!(t.accuracy(1, 7), Some(0.5));
        assert_eq!(t.accuracy(1, 0), None);
        assert_eq!(s.accuracy(1, 0), Some(0.5));
        assert_eq!(s.accuracy(1, 2), Some(1.0));
        assert!(fit_bins(&preds, &[], &[], &[]).is_err());
    }

    fn table(rows: &[&[Option<f64>]], bins: usize) -> Vec<Vec<Option<f64>>> {
        rows.iter()
            .map(|r| {
                let mut v = vec![None; bins];
                v[..r.len()].copy_from_slice(r);
                v
            })
            .collect()
    }

    #[test]
    fn selection_examples() {
        let t = table(&[&[Some(0.8)], &[Some(0.7)], &[Some(0.5)], &[Some(0.9)], &[Some(0.1)]], 1);
        let s = table(&[&[Some(0.6)], &[Some(0.8)], &[None], &[Some(0.2)], &[Some(0.3)]], 1);
        assert_eq!(select_classifier(&t, &s, 0, 0, 4), 3);

        let flat = vec![vec![Some(0.4)]; 5];
        assert_eq!(select_classifier(&flat, &flat, 0, 0, 4), 0);

        let unseen = vec![vec![None]; 5];
        assert_eq!(select_classifier(&unseen, &unseen, 0, 0, 4), 4);
    }

    fn leaf(class: usize, n_features: usize) -> TrainedClassifier {
        TrainedClassifier {
            format_version: MODEL_FORMAT_VERSION,
            kind: ClassifierKind::Tree,
            feature_name: "leaf".into(),
            hyperparameters: LearnerParams::Tree(TreeParams::default()),
            seed: 0,
            n_features,
            n_classes: 3,
            params: ModelParams::Tree {
                nodes: vec![TreeNode::Leaf { class }],
            },
        }
    }

    fn tree_spec(blocks: &[Block]) -> ClassifierSpec {
        ClassifierSpec::new(ClassifierKind::Tree, "Leaf", blocks)
    }

    #[test]
    fn predict_uses_selected_binding() {
        let specs = vec![tree_spec(&[Block::Duration]), tree_spec(&[Block::Funny])];
        let classifiers = vec![leaf(1, 1), leaf(2, 1)];
        let mut topic = BinTable::new(2, TOPICS);
        topic.total[1][5] = 2;
        topic.correct[1][5] = 2;
        let model = EnsembleModel::new(specs, classifiers, topic, BinTable::new(2, SENTIMENTS), 0).unwrap();

        let mut fv = FeatureVector::default();
        fv.blocks.insert(Block::Duration, vec![3.0]);
        fv.blocks.insert(Block::Funny, vec![0.0]);
        assert_eq!(model.predict(&fv, 5, 0).unwrap(), 2);
        // Unseen everywhere: fallback classifier 0.
        assert_eq!(model.predict(&fv, 6, 0).unwrap(), 1);

        fv.blocks.remove(&Block::Funny);
        let err = model.predict(&fv, 5, 0).unwrap_err();
        assert!(err.to_string().contains("funny"), "{err}");
    }

    #[test]
    fn mismatched_binding_rejected() {
        let specs = vec![tree_spec(&[Block::FlowHist])];
        let bins = |b| BinTable::new(1, b);
        assert!(EnsembleModel::new(specs, vec![leaf(0, 1)], bins(TOPICS), bins(SENTIMENTS), 0).is_err());
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let specs = vec![tree_spec(&[Block::Duration]), tree_spec(&[Block::Funny])];
        let (t, s) = fit_bins(&[vec![0, 1], vec![1, 1]], &[1, 1], &[0, 1], &[2, 2]).unwrap();
        let model = EnsembleModel::new(specs, vec![leaf(0, 1), leaf(1, 1)], t, s, 1).unwrap();
        model.save(dir.path()).unwrap();
        assert!(dir.path().join("00_tree_leaf.json").exists());
        assert_eq!(EnsembleModel::load(dir.path()).unwrap(), model);
    }

    fn acc_table(n: usize, bins: usize) -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
        proptest::collection::vec(
            proptest::collection::vec(proptest::option::weighted(0.8, (0u32..=10).prop_map(|k| f64::from(k) / 10.0)), bins),
            n,
        )
    }

    proptest! {
        #[test]
        fn selection_invariant_under_monotone_maps(t in acc_table(6, 3), s in acc_table(6, 3), topic in 0usize..3, sent in 0usize..3) {
            let expected = select_classifier(&t, &s, topic, sent, 2);
            let map = |tab: &Vec<Vec<Option<f64>>>| -> Vec<Vec<Option<f64>>> {
                tab.iter().map(|r| r.iter().map(|v| v.map(|a| (3.0 * a).exp() / 30.0 + 0.1)).collect()).collect()
            };
            prop_assert_eq!(select_classifier(&map(&t), &map(&s), topic, sent, 2), expected);
        }

        #[test]
        fn bin_totals_reconcile(
            samples in proptest::collection::vec((0usize..3, 0u8..38, 0u8..30), 1..80),
            preds in proptest::collection::vec(proptest::collection::vec(0usize..3, 80), 1..5),
        ) {
            let truth: Vec<usize> = samples.iter().map(|s| s.0).collect();
            let topics: Vec<u8> = samples.iter().map(|s| s.1).collect();
            let sents: Vec<u8> = samples.iter().map(|s| s.2).collect();
            let preds: Vec<Vec<usize>> = preds.into_iter().map(|p| p[..truth.len()].to_vec()).collect();
            let (t, s) = fit_bins(&preds, &truth, &topics, &sents).unwrap();
            for (i, p) in preds.iter().enumerate() {
                let correct = p.iter().zip(&truth).filter(|(a, b)| a == b).count() as u32;
                for table in [&t, &s] {
                    prop_assert_eq!(table.correct[i].iter().sum::<u32>(), correct);
                    prop_assert_eq!(table.total[i].iter().sum::<u32>() as usize, truth.len());
                }
            }
        }
    }
}
