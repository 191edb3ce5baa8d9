//! One-vs-rest logistic regression, full-batch gradient descent with an
//! L2 penalty on the weights (bias unpenalised).
//!
//! The penalty is applied as a proximal step, `w <- (w - step * grad) /
//! (1 + step * lambda)`, which stays stable for any `lambda`.

use super::{dot, ClassifierKind, LabeledSet, LearnerParams, LogregParams, Matrix, ModelParams, Standardizer, TrainedClassifier, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss plus `lambda / 2 * |w|^2`. `params` holds the
/// weights followed by the bias; `targets` are 0/1.
pub fn logistic_objective(params: &[f64], x: &Matrix, targets: &[f64], lambda: f64) -> f64 {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    let loss: f64 = x
        .iter_rows()
        .zip(targets)
        .map(|(row, &t)| {
            let z = dot(w, row) + b;
            // -[t log s(z) + (1-t) log(1 - s(z))]
            softplus(z) - t * z
        })
        .sum();
    loss / x.rows() as f64 + 0.5 * lambda * dot(w, w)
}

/// Analytic gradient of [`logistic_objective`].
pub fn logistic_gradient(params: &[f64], x: &Matrix, targets: &[f64], lambda: f64) -> Vec<f64> {
    let mut grad = loss_gradient(params, x, targets);
    let d = x.cols();
    for (g, w) in grad[..d].iter_mut().zip(&params[..d]) {
        *g += lambda * w;
    }
    grad
}

fn loss_gradient(params: &[f64], x: &Matrix, targets: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    let mut grad = vec![0.0; d + 1];
    for (row, &t) in x.iter_rows().zip(targets) {
        let r = sigmoid(dot(w, row) + b) - t;
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += r * v;
        }
        grad[d] += r;
    }
    let n = x.rows() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

pub fn train_logreg(data: &LabeledSet, params: &LogregParams, seed: u64) -> Result<TrainedClassifier> {
    if !(params.lambda >= 0.0 && params.step > 0.0) {
        return Err(Error::invalid("logistic regression needs lambda >= 0 and step > 0"));
    }
    if data.is_empty() {
        return Err(Error::invalid(format!("{}: no training data", data.feature_name)));
    }
    data.require_two_classes()?;
    let scaler = Standardizer::fit(&data.x);
    let z = data.x.map_rows(|r| scaler.apply(r))?;
    let d = z.cols();

    let mut weights = Vec::with_capacity(data.n_classes);
    let mut biases = Vec::with_capacity(data.n_classes);
    for class in 0..data.n_classes {
        let targets: Vec<f64> = data.y.iter().map(|&c| f64::from(u8::from(c == class))).collect();
        let mut theta = vec![0.0; d + 1];
        for _ in 0..params.epochs {
            let g = loss_gradient(&theta, &z, &targets);
            let shrink = 1.0 / (1.0 + params.step * params.lambda);
            for (t, gi) in theta[..d].iter_mut().zip(&g[..d]) {
                *t = (*t - params.step * gi) * shrink;
            }
            theta[d] -= params.step * g[d];
        }
        let objective = logistic_objective(&theta, &z, &targets, params.lambda);
        if !objective.is_finite() || theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{}: logistic loss is not finite (step {} too large?)",
                data.feature_name, params.step
            )));
        }
        biases.push(theta.pop().expect("bias"));
        weights.push(theta);
    }
    Ok(TrainedClassifier {
        format_version: MODEL_FORMAT_VERSION,
        kind: ClassifierKind::Logreg,
        feature_name: data.feature_name.clone(),
        hyperparameters: LearnerParams::Logreg(*params),
        seed,
        n_features: data.x.cols(),
        n_classes: data.n_classes,
        params: ModelParams::Linear {
            standardization: scaler,
            degree: 1,
            weights,
            biases,
        },
    })
}
