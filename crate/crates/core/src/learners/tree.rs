//! CART classification tree with Gini impurity.

use serde::{Deserialize, Serialize};

use super::{ClassifierKind, LabeledSet, LearnerParams, Matrix, ModelParams, TrainedClassifier, TreeParams, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub weighted_gini: f64,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn class_counts(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    counts
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

/// Lowest weighted child Gini over every feature and every midpoint between
/// consecutive distinct values. Scans features in index order and
/// thresholds ascending; the first minimum wins.
pub fn best_split(x: &Matrix, y: &[usize], idx: &[usize], n_classes: usize) -> Option<Split> {
    let n = idx.len() as f64;
    let total = class_counts(y, idx, n_classes);
    let mut best: Option<Split> = None;
    let mut sorted = idx.to_vec();
    for feature in 0..x.cols() {
        sorted.sort_by(|&a, &b| x.row(a)[feature].total_cmp(&x.row(b)[feature]));
        let mut left = vec![0usize; n_classes];
        for k in 0..sorted.len() - 1 {
            left[y[sorted[k]]] += 1;
            let (lo, hi) = (x.row(sorted[k])[feature], x.row(sorted[k + 1])[feature]);
            if lo == hi {
                continue;
            }
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let n_left = (k + 1) as f64;
            let score = (n_left * gini(&left) + (n - n_left) * gini(&right)) / n;
            if best.is_none_or(|b| score < b.weighted_gini) {
                best = Some(Split {
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                    weighted_gini: score,
                });
            }
        }
    }
    best
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = class_counts(self.y, idx, self.n_classes);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { class: majority(&counts) });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || idx.len() < self.params.min_split || depth >= self.params.max_depth {
            return id;
        }
        let Some(split) = best_split(self.x, self.y, idx, self.n_classes) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.row(i)[split.feature] <= split.threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

pub fn train_tree(data: &LabeledSet, params: &TreeParams) -> Result<TrainedClassifier> {
    if data.is_empty() {
        return Err(Error::invalid(format!("{}: no training data", data.feature_name)));
    }
    if params.min_split < 2 {
        return Err(Error::invalid("tree min_split must be at least 2"));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut builder = Builder {
        x: &data.x,
        y: &data.y,
        n_classes: data.n_classes,
        params: *params,
        nodes: Vec::new(),
    };
    builder.grow(&idx, 0);
    Ok(TrainedClassifier {
        format_version: MODEL_FORMAT_VERSION,
        kind: ClassifierKind::Tree,
        feature_name: data.feature_name.clone(),
        hyperparameters: LearnerParams::Tree(*params),
        seed: 0,
        n_features: data.x.cols(),
        n_classes: data.n_classes,
        params: ModelParams::Tree { nodes: builder.nodes },
    })
}

pub(super) fn predict(nodes: &[TreeNode], x: &[f64]) -> usize {
    let mut at = 0;
    loop {
        match nodes[at] {
            TreeNode::Leaf { class } => return class,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x[feature] <= threshold { left } else { right },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{accuracy, indicator};
    use super::*;
    use rand::Rng;

    fn one_d(xs: &[f64], y: &[usize], n_classes: usize) -> LabeledSet {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        LabeledSet::new(Matrix::from_rows(&rows).unwrap(), y.to_vec(), n_classes, "1d").unwrap()
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[7, 0]), 0.0);
        assert_eq!(gini(&[5, 5]), 0.5);
        assert!((gini(&[1, 1, 1]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_split_example() {
        let data = one_d(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], 2);
        let model = train_tree(&data, &TreeParams { min_split: 2, max_depth: 10 }).unwrap();
        let ModelParams::Tree { nodes } = &model.params else { panic!() };
        assert_eq!(nodes.len(), 3);
        assert!(matches!(nodes[0], TreeNode::Split { feature: 0, threshold, .. } if threshold == 2.5));
        assert_eq!(accuracy(&model, &data), 1.0);
    }

    #[test]
    fn stopping_rules() {
        let data = one_d(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1], 2);
        let stump = train_tree(&data, &TreeParams { min_split: 2, max_depth: 0 }).unwrap();
        // Depth 0: a single majority leaf; 2-2 tie goes to class 0.
        assert_eq!(stump.params, ModelParams::Tree { nodes: vec![TreeNode::Leaf { class: 0 }] });
        let small = train_tree(&data, &TreeParams { min_split: 5, max_depth: 10 }).unwrap();
        assert!(matches!(&small.params, ModelParams::Tree { nodes } if nodes.len() == 1));
        let full = train_tree(&data, &TreeParams { min_split: 2, max_depth: 10 }).unwrap();
        assert_eq!(accuracy(&full, &data), 1.0);
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let data = one_d(&[1.0, 1.0, 1.0], &[0, 1, 1], 2);
        let model = train_tree(&data, &TreeParams::default()).unwrap();
        assert_eq!(model.params, ModelParams::Tree { nodes: vec![TreeNode::Leaf { class: 1 }] });
    }

    #[test]
    fn one_hot_topics_are_separated() {
        let data = indicator(4);
        let model = train_tree(&data, &TreeParams::default()).unwrap();
        assert_eq!(accuracy(&model, &data), 1.0);
    }

    #[test]
    fn empty_data_rejected() {
        let data = LabeledSet::new(Matrix::new(0, 1, vec![]).unwrap(), vec![], 2, "none").unwrap();
        assert!(train_tree(&data, &TreeParams::default()).is_err());
    }

    /// Every threshold between sorted distinct values, scored independently.
    fn brute_force(xs: &[f64], y: &[usize], n_classes: usize) -> Vec<(f64, f64)> {
        let mut values: Vec<f64> = xs.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
            .windows(2)
            .map(|w| {
                let t = (w[0] + w[1]) / 2.0;
                let mut l = vec![0; n_classes];
                let mut r = vec![0; n_classes];
                for (&x, &c) in xs.iter().zip(y) {
                    if x <= t { l[c] += 1 } else { r[c] += 1 }
                }
                let (nl, nr) = (l.iter().sum::<usize>() as f64, r.iter().sum::<usize>() as f64);
                (t, (nl * gini(&l) + nr * gini(&r)) / (nl + nr))
            })
            .collect()
    }

    #[test]
    fn root_split_matches_brute_force() {
        let mut rng = crate::rng::rng_from_seed(2024);
        let mut checked = 0;
        while checked < 50 {
            let n = rng.gen_range(4..30);
            let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..40))).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let candidates = brute_force(&xs, &y, 3);
            let Some(min) = candidates.iter().map(|c| c.1).min_by(f64::total_cmp) else { continue };
            let optimal: Vec<f64> = candidates.iter().filter(|c| (c.1 - min).abs() < 1e-12).map(|c| c.0).collect();
            if optimal.len() != 1 {
                continue;
            }
            let data = one_d(&xs, &y, 3);
            let idx: Vec<usize> = (0..n).collect();
            let split = best_split(&data.x, &data.y, &idx, 3).unwrap();
            assert_eq!(split.threshold, optimal[0]);
            assert!((split.weighted_gini - min).abs() < 1e-12);
            checked += 1;
        }
    }
}
