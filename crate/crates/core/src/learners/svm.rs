//! One-vs-rest linear SVM trained by stochastic subgradient descent on the
//! L2-regularised hinge loss (Pegasos schedule, step `1 / (lambda * t)`).
//!
//! The bias is folded in as a constant input feature and regularised with
//! the weights. Each class sees the same per-epoch sample order. Plain
//! stochastic subgradient steps do not decrease the objective monotonically,
//! so the best end-of-epoch iterate is kept.

use rand::seq::SliceRandom;

use super::{dot, polynomial_features, ClassifierKind, LabeledSet, LearnerParams, Matrix, ModelParams, Standardizer, SvmParams, TrainedClassifier, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Regularised hinge objective of one binary problem; `w` carries the bias
/// as its last entry and `z` rows are already expanded.
pub fn svm_objective(w: &[f64], z: &Matrix, signs: &[f64], lambda: f64) -> f64 {
    let d = z.cols();
    let hinge: f64 = z
        .iter_rows()
        .zip(signs)
        .map(|(row, &s)| (1.0 - s * (dot(&w[..d], row) + w[d])).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / z.rows() as f64
}

fn expanded(data: &LabeledSet, scaler: &Standardizer, degree: u8) -> Result<Matrix> {
    data.x.map_rows(|r| polynomial_features(&scaler.apply(r), degree))
}

fn epoch_orders(n: usize, epochs: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..epochs)
        .map(|e| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng_from_seed(derive_seed(seed, e as u64)));
            order
        })
        .collect()
}

/// Train one binary problem. The returned weights are the end-of-epoch
/// iterate with the lowest objective (earliest on ties); the trace holds
/// that running minimum after each epoch.
fn pegasos(z: &Matrix, signs: &[f64], lambda: f64, orders: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
    let d = z.cols();
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut t = 0usize;
    let mut trace = Vec::with_capacity(orders.len());
    let mut best = (f64::INFINITY, w.clone());
    for order in orders {
        for &i in order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = z.row(i);
            let margin = signs[i] * (dot(&w[..d], row) + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let step = eta * signs[i];
                for (v, x) in w[..d].iter_mut().zip(row) {
                    *v += step * x;
                }
                w[d] += step;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let k = radius / norm;
                w.iter_mut().for_each(|v| *v *= k);
            }
        }
        let objective = svm_objective(&w, z, signs, lambda);
        if objective < best.0 {
            best = (objective, w.clone());
        }
        trace.push(best.0);
    }
    if orders.is_empty() {
        return (w, trace);
    }
    (best.1, trace)
}

/// Like [`train_svm`], also returning each class's per-epoch objective.
pub fn train_svm_traced(data: &LabeledSet, params: &SvmParams, seed: u64) -> Result<(TrainedClassifier, Vec<Vec<f64>>)> {
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::invalid(format!("svm lambda {} must be positive", params.lambda)));
    }
    if data.is_empty() {
        return Err(Error::invalid(format!("{}: no training data", data.feature_name)));
    }
    data.require_two_classes()?;
    let scaler = Standardizer::fit(&data.x);
    let z = expanded(data, &scaler, params.degree)?;
    let orders = epoch_orders(data.len(), params.epochs, seed);

    let mut weights = Vec::with_capacity(data.n_classes);
    let mut biases = Vec::with_capacity(data.n_classes);
    let mut traces = Vec::with_capacity(data.n_classes);
    for class in 0..data.n_classes {
        let signs: Vec<f64> = data.y.iter().map(|&c| if c == class { 1.0 } else { -1.0 }).collect();
        let (mut w, trace) = pegasos(&z, &signs, params.lambda, &orders);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{}: svm weights", data.feature_name)));
        }
        biases.push(w.pop().expect("bias"));
        weights.push(w);
        traces.push(trace);
    }
    let model = TrainedClassifier {
        format_version: MODEL_FORMAT_VERSION,
        kind: ClassifierKind::Svm,
        feature_name: data.feature_name.clone(),
        hyperparameters: LearnerParams::Svm(*params),
        seed,
        n_features: data.x.cols(),
        n_classes: data.n_classes,
        params: ModelParams::Linear {
            standardization: scaler,
            degree: params.degree,
            weights,
            biases,
        },
    };
    Ok((model, traces))
}

pub fn train_svm(data: &LabeledSet, params: &SvmParams, seed: u64) -> Result<TrainedClassifier> {
    train_svm_traced(data, params, seed).map(|(m, _)| m)
}
