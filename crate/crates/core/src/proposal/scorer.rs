//! A linear-logistic frame scorer trained by full-batch gradient descent.
//!
//! This is the desk-scale frame classifier: it consumes an external feature
//! matrix (one row per frame) and produces per-frame action probabilities
//! that feed `segments_from_scores`.

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.1,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFrameScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl LinearFrameScorer {
    pub fn zeros(dim: usize, params: TrainParams) -> Self {
        LinearFrameScorer {
            weights: vec![0.0; dim],
            bias: 0.0,
            learning_rate: params.learning_rate,
            epochs: params.epochs,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn margin(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        logistic(self.margin(row))
    }
}

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_inputs(features: &FeatureMatrix, labels: &[u8]) -> Result<()> {
    if features.cols() == 0 {
        return Err(Error::Argument("feature dimension must be at least 1".into()));
    }
    if features.rows() != labels.len() {
        return Err(Error::Argument(format!(
            "{} feature rows but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    if features.rows() == 0 {
        return Err(Error::Argument("no training examples".into()));
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(Error::validation(format!("labels[{i}]"), "labels must be 0 or 1"));
    }
    features.check_finite()
}

/// Mean logistic loss and its gradient with respect to `(weights, bias)`.
///
/// The gradient is returned as a vector of length `dim + 1` with the bias
/// component last.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    features: &FeatureMatrix,
    labels: &[u8],
) -> Result<(f64, Vec<f64>)> {
    check_inputs(features, labels)?;
    if weights.len() != features.cols() {
        return Err(Error::Argument(format!(
            "weight dimension {} does not match feature dimension {}",
            weights.len(),
            features.cols()
        )));
    }
    Ok(loss_and_gradient_unchecked(weights, bias, features, labels))
}

fn loss_and_gradient_unchecked(weights: &[f64], bias: f64, features: &FeatureMatrix, labels: &[u8]) -> (f64, Vec<f64>) {
    let n = features.rows() as f64;
    let d = features.cols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &y) in features.row_iter().zip(labels) {
        let z = bias + weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>();
        let y = f64::from(y);
        loss += softplus(z) - y * z;
        let residual = logistic(z) - y;
        for (g, x) in grad[..d].iter_mut().zip(row) {
            *g += residual * x;
        }
        grad[d] += residual;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

/// Upper bound on the Lipschitz constant of the mean logistic-loss gradient:
/// `(1 / 4n) * sum_i |(x_i, 1)|^2`, which dominates the largest Hessian eigenvalue.
pub fn lipschitz_bound(features: &FeatureMatrix) -> f64 {
    let n = features.rows().max(1) as f64;
    features
        .row_iter()
        .map(|row| 1.0 + row.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / (4.0 * n)
}

/// Full-batch gradient descent on the mean logistic loss from zero initialization.
pub fn train_scorer(features: &FeatureMatrix, labels: &[u8], params: TrainParams) -> Result<LinearFrameScorer> {
    check_inputs(features, labels)?;
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return Err(Error::Argument("learning_rate must be positive".into()));
    }
    if params.epochs == 0 {
        return Err(Error::Argument("epochs must be positive".into()));
    }
    let d = features.cols();
    let mut scorer = LinearFrameScorer::zeros(d, params);
    for _ in 0..params.epochs {
        let (_, grad) = loss_and_gradient_unchecked(&scorer.weights, scorer.bias, features, labels);
        for (w, g) in scorer.weights.iter_mut().zip(&grad[..d]) {
            *w -= params.learning_rate * g;
        }
        scorer.bias -= params.learning_rate * grad[d];
    }
    Ok(scorer)
}

/// Per-frame probabilities `logistic(w . x + b)`.
pub fn score_frames(scorer: &LinearFrameScorer, features: &FeatureMatrix) -> Result<Vec<f64>> {
    if features.cols() != scorer.dim() {
        return Err(Error::Argument(format!(
            "feature dimension {} does not match scorer dimension {}",
            features.cols(),
            scorer.dim()
        )));
    }
    Ok(features.row_iter().map(|row| scorer.score(row)).collect())
}
