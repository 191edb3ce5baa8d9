//! Multiclass base learners: one-vs-rest linear SVM, CART tree with Gini
//! impurity, one-vs-rest logistic regression.
//!
//! Every tie (argmax over class scores, leaf majority, split choice)
//! resolves to the smallest index.

mod logreg;
mod svm;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use logreg::{logistic_gradient, logistic_objective, train_logreg};
pub use svm::{svm_objective, train_svm, train_svm_traced};
pub use tree::{best_split, gini, train_tree, Split, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = self.iter_rows().map(f).collect();
        Matrix::from_rows(&rows)
    }
}

/// Training data for one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub feature_name: String,
}

impl LabeledSet {
    pub fn new(x: Matrix, y: Vec<usize>, n_classes: usize, feature_name: impl Into<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::invalid(format!("label {bad} outside 0..{n_classes}")));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains non-finite values"));
        }
        Ok(LabeledSet {
            x,
            y,
            n_classes,
            feature_name: feature_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn distinct_classes(&self) -> usize {
        let mut seen = vec![false; self.n_classes];
        for &c in &self.y {
            seen[c] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    pub(crate) fn require_two_classes(&self) -> Result<()> {
        if self.distinct_classes() < 2 {
            return Err(Error::invalid(format!(
                "{}: training data needs at least two classes",
                self.feature_name
            )));
        }
        Ok(())
    }
}

/// Per-dimension centring and scaling fitted on training data. Constant
/// columns keep scale 1, so they standardise to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Explicit degree-2 polynomial map: the inputs followed by every product
/// `x_i * x_j` with `i <= j`.
pub fn polynomial_features(row: &[f64], degree: u8) -> Vec<f64> {
    if degree < 2 {
        return row.to_vec();
    }
    let d = row.len();
    let mut out = Vec::with_capacity(d + d * (d + 1) / 2);
    out.extend_from_slice(row);
    for i in 0..d {
        for j in i..d {
            out.push(row[i] * row[j]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Svm,
    Tree,
    Logreg,
}

impl ClassifierKind {
    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Tree => "Decision Tree",
            ClassifierKind::Logreg => "Logistic Regression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub degree: u8,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 50,
            degree: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_split: usize,
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_split: 2,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogregParams {
    pub lambda: f64,
    pub epochs: usize,
    pub step: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        LogregParams {
            lambda: 1e-4,
            epochs: 200,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerParams {
    Svm(SvmParams),
    Tree(TreeParams),
    Logreg(LogregParams),
}

impl LearnerParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            LearnerParams::Svm(_) => ClassifierKind::Svm,
            LearnerParams::Tree(_) => ClassifierKind::Tree,
            LearnerParams::Logreg(_) => ClassifierKind::Logreg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        standardization: Standardizer,
        degree: u8,
        /// One weight vector per class, over the (possibly expanded)
        /// standardised features.
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
    Tree {
        nodes: Vec<TreeNode>,
    },
}

/// A fitted, immutable classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub feature_name: String,
    pub hyperparameters: LearnerParams,
    pub seed: u64,
    pub n_features: usize,
    pub n_classes: usize,
    pub params: ModelParams,
}

pub fn train(data: &LabeledSet, params: &LearnerParams, seed: u64) -> Result<TrainedClassifier> {
    match params {
        LearnerParams::Svm(p) => train_svm(data, p, seed),
        LearnerParams::Tree(p) => train_tree(data, p),
        LearnerParams::Logreg(p) => train_logreg(data, p, seed),
    }
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TrainedClassifier {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Per-class decision values of a linear model.
    pub fn scores(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_dim(x)?;
        Ok(match &self.params {
            ModelParams::Linear {
                standardization,
                degree,
                weights,
                biases,
            } => {
                let z = polynomial_features(&standardization.apply(x), *degree);
                Some(weights.iter().zip(biases).map(|(w, b)| dot(w, &z) + b).collect())
            }
            ModelParams::Tree { .. } => None,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        match &self.params {
            ModelParams::Linear { .. } => Ok(argmax(&self.scores(x)?.expect("linear"))),
            ModelParams::Tree { nodes } => Ok(tree::predict(nodes, x)),
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<usize>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = Self::from_json(&text).map_err(|e| Error::json(path, e))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "{}: unsupported model format {}",
                path.display(),
                model.format_version
            )));
        }
        Ok(model)
    }
}
