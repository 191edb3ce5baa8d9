//! Classification tasks, accuracy, confusion matrices and the repeated
//! train/test experiment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{split_indices, CleanVideoRecord};
use crate::detection_features::compute_priors;
use crate::ensemble::{fit_bins, standard_classifiers, ClassifierSpec, EnsembleModel, FALLBACK_INDEX};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, VideoFeatures};
use crate::learners::{train, LabeledSet, LearnerParams, LogregParams, Matrix, SvmParams, TrainedClassifier, TreeParams, ClassifierKind};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Binary,
    FourWay,
    FiveWay,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Binary, TaskKind::FourWay, TaskKind::FiveWay];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Binary => "binary",
            TaskKind::FourWay => "four_way",
            TaskKind::FiveWay => "five_way",
        }
    }
}

/// Maps effectiveness 1..=5 to a task class, or drops the video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub label_map: [Option<usize>; 5],
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        let label_map = match kind {
            TaskKind::Binary => [Some(0), Some(0), None, Some(1), Some(1)],
            TaskKind::FourWay => [Some(0), Some(1), None, Some(2), Some(3)],
            TaskKind::FiveWay => [Some(0), Some(1), Some(2), Some(3), Some(4)],
        };
        TaskSpec { kind, label_map }
    }

    pub fn map(&self, effectiveness: u8) -> Option<usize> {
        match effectiveness {
            1..=5 => self.label_map[usize::from(effectiveness - 1)],
            _ => None,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.label_map.iter().flatten().max().map_or(0, |m| m + 1)
    }

    /// Chance accuracy on balanced classes.
    pub fn baseline(&self) -> f64 {
        1.0 / self.n_classes() as f64
    }
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("accuracy of an empty prediction list"));
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                got: other.n_classes(),
            });
        }
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
        Ok(())
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let mut m = ConfusionMatrix::zeros(n_classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::invalid(format!("label {} outside 0..{n_classes}", t.max(p))));
        }
        m.counts[t][p] += 1;
    }
    Ok(m)
}

/// Hyperparameters per learner family, with optional per-classifier
/// overrides keyed by [`ClassifierSpec::key`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    pub svm: SvmParams,
    pub tree: TreeParams,
    pub logreg: LogregParams,
    pub overrides: BTreeMap<String, LearnerParams>,
}

impl LearnerSettings {
    pub fn params_for(&self, spec: &ClassifierSpec) -> Result<LearnerParams> {
        if let Some(p) = self.overrides.get(&spec.key()) {
            if p.kind() != spec.kind {
                return Err(Error::invalid(format!("override for {} has the wrong learner kind", spec.key())));
            }
            return Ok(*p);
        }
        Ok(match spec.kind {
            ClassifierKind::Svm => LearnerParams::Svm(self.svm),
            ClassifierKind::Tree => LearnerParams::Tree(self.tree),
            ClassifierKind::Logreg => LearnerParams::Logreg(self.logreg),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub learners: LearnerSettings,
    pub train_fraction: f64,
    /// Pool detection priors over every task video instead of the training split.
    pub priors_on_full_dataset: bool,
    /// Estimate accuracy bins from out-of-fold predictions instead of resubstitution.
    pub out_of_fold_bins: bool,
    pub folds: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            learners: LearnerSettings::default(),
            train_fraction: 0.8,
            priors_on_full_dataset: false,
            out_of_fold_bins: false,
            folds: 5,
        }
    }
}

/// One video as seen by the learners.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSample {
    pub features: FeatureVector,
    pub label: usize,
    pub topic: u8,
    pub sentiment: u8,
}

fn design_matrix(samples: &[&TaskSample], spec: &ClassifierSpec) -> Result<Matrix> {
    let rows = samples
        .iter()
        .map(|s| s.features.gather(&spec.blocks))
        .collect::<Result<Vec<_>>>()?;
    let cols = spec.blocks.iter().map(|b| b.dim()).sum();
    Matrix::new(rows.len(), cols, rows.into_iter().flatten().collect())
}

fn train_one(
    spec: &ClassifierSpec,
    index: usize,
    samples: &[&TaskSample],
    n_classes: usize,
    settings: &LearnerSettings,
    seed: u64,
) -> Result<TrainedClassifier> {
    let x = design_matrix(samples, spec)?;
    let y = samples.iter().map(|s| s.label).collect();
    let data = LabeledSet::new(x, y, n_classes, spec.key())?;
    train(&data, &settings.params_for(spec)?, derive_seed(seed, index as u64))
}

fn predict_many(model: &TrainedClassifier, spec: &ClassifierSpec, samples: &[&TaskSample]) -> Result<Vec<usize>> {
    samples
        .iter()
        .map(|s| model.predict(&s.features.gather(&spec.blocks)?))
        .collect()
}

/// Train every classifier on `train`, then fit the accuracy bins by
/// resubstitution or, if configured, from out-of-fold predictions.
pub fn train_ensemble(
    specs: &[ClassifierSpec],
    fallback_index: usize,
    train: &[TaskSample],
    n_classes: usize,
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<EnsembleModel> {
    let all: Vec<&TaskSample> = train.iter().collect();
    let classifiers = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| train_one(spec, i, &all, n_classes, &settings.learners, seed))
        .collect::<Result<Vec<_>>>()?;

    let predictions: Vec<Vec<usize>> = if settings.out_of_fold_bins {
        out_of_fold_predictions(specs, train, n_classes, settings, seed)?
    } else {
        classifiers
            .par_iter()
            .zip(specs)
            .map(|(m, spec)| predict_many(m, spec, &all))
            .collect::<Result<_>>()?
    };
    let truth: Vec<usize> = train.iter().map(|s| s.label).collect();
    let topics: Vec<u8> = train.iter().map(|s| s.topic).collect();
    let sentiments: Vec<u8> = train.iter().map(|s| s.sentiment).collect();
    let (topic_bins, sentiment_bins) = fit_bins(&predictions, &truth, &topics, &sentiments)?;
    EnsembleModel::new(specs.to_vec(), classifiers, topic_bins, sentiment_bins, fallback_index)
}

fn out_of_fold_predictions(
    specs: &[ClassifierSpec],
    train: &[TaskSample],
    n_classes: usize,
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let k = settings.folds;
    if k < 2 || k > train.len() {
        return Err(Error::invalid(format!("cannot make {k} folds from {} samples", train.len())));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, u64::MAX)));
    let mut fold = vec![0; train.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let results = jobs
        .par_iter()
        .map(|&(c, f)| {
            let fit: Vec<&TaskSample> = train.iter().zip(&fold).filter(|(_, &g)| g != f).map(|(s, _)| s).collect();
            let held: Vec<usize> = (0..train.len()).filter(|&i| fold[i] == f).collect();
            let model = train_one(&specs[c], c, &fit, n_classes, &settings.learners, derive_seed(seed, f as u64 + 1))?;
            let held_samples: Vec<&TaskSample> = held.iter().map(|&i| &train[i]).collect();
            Ok((held, predict_many(&model, &specs[c], &held_samples)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut predictions = vec![vec![0; train.len()]; specs.len()];
    for (&(c, _), (held, preds)) in jobs.iter().zip(results) {
        for (i, p) in held.into_iter().zip(preds) {
            predictions[c][i] = p;
        }
    }
    Ok(predictions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub classifier_accuracy: Vec<f64>,
    pub ensemble_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub test_ids: Vec<String>,
    pub ensemble: EnsembleModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub task: TaskSpec,
    pub specs: Vec<ClassifierSpec>,
    pub classifier_mean: Vec<f64>,
    pub ensemble_mean: f64,
    /// Ensemble confusion matrix summed over seeds.
    pub confusion: ConfusionMatrix,
    pub runs: Vec<SeedRun>,
}

/// Evaluate `model` and each of its classifiers on `test`.
pub fn evaluate(model: &EnsembleModel, test: &[TaskSample], n_classes: usize) -> Result<(Vec<f64>, f64, ConfusionMatrix)> {
    let refs: Vec<&TaskSample> = test.iter().collect();
    let truth: Vec<usize> = test.iter().map(|s| s.label).collect();
    let per_classifier = model
        .classifiers
        .par_iter()
        .zip(&model.specs)
        .map(|(m, spec)| accuracy(&truth, &predict_many(m, spec, &refs)?))
        .collect::<Result<Vec<_>>>()?;
    let predicted = test
        .iter()
        .map(|s| model.predict(&s.features, s.topic, s.sentiment))
        .collect::<Result<Vec<_>>>()?;
    Ok((per_classifier, accuracy(&truth, &predicted)?, confusion(&truth, &predicted, n_classes)?))
}

/// Repeated 80/20 experiment over the 25 standard classifiers, one run
/// per seed. `features[i]` belongs to `records[i]`.
pub fn run_experiment(
    records: &[CleanVideoRecord],
    features: &[VideoFeatures],
    task: &TaskSpec,
    seeds: &[u64],
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    if records.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            got: features.len(),
        });
    }
    if seeds.is_empty() {
        return Err(Error::invalid("no seeds given"));
    }
    for (r, f) in records.iter().zip(features) {
        if r.video_id != f.video_id {
            return Err(Error::invalid(format!("feature file {} paired with video {}", f.video_id, r.video_id)));
        }
    }
    let kept: Vec<(usize, usize)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| task.map(r.effectiveness).map(|c| (i, c)))
        .collect();
    let n_classes = task.n_classes();
    for class in 0..n_classes {
        if !kept.iter().any(|&(_, c)| c == class) {
            return Err(Error::invalid(format!("{} task: class {class} has no videos", task.kind.name())));
        }
    }
    let specs = standard_classifiers();
    let full_priors = compute_priors(kept.iter().map(|&(i, _)| &features[i].detections));

    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let (train_idx, test_idx) = split_indices(kept.len(), settings.train_fraction, seed)?;
            let priors = if settings.priors_on_full_dataset {
                full_priors.clone()
            } else {
                compute_priors(train_idx.iter().map(|&k| &features[kept[k].0].detections))
            };
            let sample = |k: usize| {
                let (i, label) = kept[k];
                TaskSample {
                    features: features[i].materialize(&priors),
                    label,
                    topic: records[i].topic,
                    sentiment: records[i].sentiment,
                }
            };
            let train: Vec<TaskSample> = train_idx.iter().map(|&k| sample(k)).collect();
            let test: Vec<TaskSample> = test_idx.iter().map(|&k| sample(k)).collect();
            let ensemble = train_ensemble(&specs, FALLBACK_INDEX, &train, n_classes, settings, seed)?;
            let (classifier_accuracy, ensemble_accuracy, confusion) = evaluate(&ensemble, &test, n_classes)?;
            Ok(SeedRun {
                seed,
                classifier_accuracy,
                ensemble_accuracy,
                confusion,
                test_ids: test_idx.iter().map(|&k| records[kept[k].0].video_id.clone()).collect(),
                ensemble,
            })
        })
        .collect::<Result<Vec<SeedRun>>>()?;

    let n = runs.len() as f64;
    let classifier_mean = (0..specs.len())
        .map(|c| runs.iter().map(|r| r.classifier_accuracy[c]).sum::<f64>() / n)
        .collect();
    let ensemble_mean = runs.iter().map(|r| r.ensemble_accuracy).sum::<f64>() / n;
    let mut total = ConfusionMatrix::zeros(n_classes);
    for r in &runs {
        total.add(&r.confusion)?;
    }
    Ok(ExperimentReport {
        task: task.clone(),
        specs,
        classifier_mean,
        ensemble_mean,
        confusion: total,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn task_maps() {
        let b = TaskSpec::new(TaskKind::Binary);
        assert_eq!((1..=5).map(|e| b.map(e)).collect::<Vec<_>>(), [Some(0), Some(0), None, Some(1), Some(1)]);
        assert_eq!(b.n_classes(), 2);
        assert_eq!(TaskSpec::new(TaskKind::FourWay).n_classes(), 4);
        assert_eq!(TaskSpec::new(TaskKind::FourWay).map(3), None);
        let five = TaskSpec::new(TaskKind::FiveWay);
        assert_eq!(five.map(4), Some(3));
        assert_eq!(five.baseline(), 0.2);
        assert_eq!(five.map(0), None);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn confusion_examples() {
        let m = confusion(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert_eq!(m.counts, [[1, 0], [1, 1]]);
        let perfect = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(perfect.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let constant = confusion(&[0, 1, 0, 1], &[0; 4], 2).unwrap();
        assert_eq!(constant.counts, [[2, 0], [2, 0]]);
        assert!(confusion(&[2], &[0], 2).is_err());
    }

    #[test]
    fn balanced_input_gives_balanced_tasks() {
        for kind in TaskKind::ALL {
            let task = TaskSpec::new(kind);
            let mut counts = vec![0; task.n_classes()];
            for e in 1..=5u8 {
                for _ in 0..7 {
                    if let Some(c) = task.map(e) {
                        counts[c] += 1;
                    }
                }
            }
            assert!(counts.iter().all(|&c| c == counts[0]), "{kind:?}: {counts:?}");
        }
    }

    #[test]
    fn override_kind_checked() {
        let mut settings = LearnerSettings::default();
        let spec = &standard_classifiers()[0];
        settings.overrides.insert(spec.key(), LearnerParams::Tree(TreeParams::default()));
        assert!(settings.params_for(spec).is_err());
        settings.overrides.insert(spec.key(), LearnerParams::Svm(SvmParams { degree: 2, ..SvmParams::default() }));
        assert!(matches!(settings.params_for(spec).unwrap(), LearnerParams::Svm(p) if p.degree == 2));
    }

    proptest! {
        #[test]
        fn accuracy_is_confusion_trace(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let m = confusion(&t, &p, 4).unwrap();
            prop_assert_eq!(m.total() as usize, t.len());
            prop_assert_eq!(accuracy(&t, &p).unwrap(), m.trace() as f64 / m.total() as f64);
        }
    }
}
