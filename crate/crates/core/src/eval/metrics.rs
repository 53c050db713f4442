use alloc::vec::Vec;

use crate::estimators::{predict, Task};
use crate::linalg::{norm, sub};
use crate::math::{ceil, exp, powf};
use crate::seed;
use crate::streams::{Concept, GroundTruth};
use crate::{Error, Result};

use super::FeatureMap;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Running fraction of correct predictions: `AA(t) = #{i <= t : ŷ(i) = y(i)} / t`.
pub fn accumulated_accuracy(predictions: &[f64], labels: &[f64]) -> Result<Vec<f64>> {
    same_len(predictions.len(), labels.len())?;
    let mut correct = 0u64;
    Ok(predictions
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, y))| {
            if p == y {
                correct += 1;
            }
            correct as f64 / (i + 1) as f64
        })
        .collect())
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    same_len(predictions.len(), targets.len())?;
    if predictions.is_empty() {
        return Err(Error::DegenerateInput("mean of an empty series"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// `‖w(t) - ŵ(t)‖` per step, where `w(t)` is the weight in force after step
/// `t` and `w_hats[t]` the estimate after consuming sample `t`.
pub fn estimate_error_series(truth: Option<&[GroundTruth]>, w_hats: &[Vec<f64>]) -> Result<Vec<f64>> {
    let truth = truth.ok_or(Error::MissingTruth("estimate error needs true weights"))?;
    same_len(truth.len(), w_hats.len())?;
    truth
        .iter()
        .zip(w_hats)
        .map(|(g, w_hat)| {
            if g.w.len() != w_hat.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.w.len(),
                    found: w_hat.len(),
                });
            }
            Ok(norm(&sub(&g.w_after(), w_hat)))
        })
        .collect()
}

/// Sum over datasets of `acc / min_acc`, one score per algorithm.
///
/// `table[a][k]` is the accuracy of algorithm `a` on dataset `k`.
pub fn robustness(table: &[Vec<f64>]) -> Result<Vec<f64>> {
    let datasets = table.first().map_or(0, Vec::len);
    if table.is_empty() || datasets == 0 {
        return Err(Error::DegenerateInput("empty accuracy table"));
    }
    for row in table {
        same_len(row.len(), datasets)?;
        if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::DegenerateInput("accuracies must be finite and >= 0"));
        }
    }
    let mut scores = alloc::vec![0.0; table.len()];
    for k in 0..datasets {
        let worst = table.iter().map(|row| row[k]).fold(f64::INFINITY, f64::min);
        if worst <= 0.0 {
            return Err(Error::DegenerateInput("smallest accuracy on a dataset is zero"));
        }
        for (score, row) in scores.iter_mut().zip(table) {
            *score += row[k] / worst;
        }
    }
    Ok(scores)
}

/// Forgetting factor for a forgetting period: `mu = 1 / T0`.
pub fn recommend_mu(forgetting_period: f64) -> Result<f64> {
    if !(forgetting_period >= 1.0) || !forgetting_period.is_finite() {
        return Err(Error::param("T0", "forgetting period must be >= 1"));
    }
    Ok(1.0 / forgetting_period)
}

/// Weight `(1 - mu)^ceil(1/mu)` carried by a sample one forgetting period old.
pub fn weight_after_one_period(mu: f64) -> f64 {
    powf(1.0 - mu, ceil(1.0 / mu))
}

/// `e^{-1}`, the reference weight of one forgetting period.
pub fn inverse_e() -> f64 {
    exp(-1.0)
}

/// Accuracy of fixed weights on `n_test` fresh samples of `concept`.
pub fn holdout_accuracy(
    w_hat: &[f64],
    concept: &Concept,
    features: FeatureMap,
    n_test: usize,
    seed: u64,
) -> Result<f64> {
    if concept.task() != Task::Classification {
        return Err(Error::DegenerateInput("holdout accuracy needs a classification concept"));
    }
    let hits = holdout_fold(w_hat, concept, features, n_test, seed, |pred, y| {
        if predict_label(pred) == y {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(hits)
}

/// Mean squared error of fixed weights on `n_test` fresh samples of `concept`.
pub fn holdout_mse(
    w_hat: &[f64],
    concept: &Concept,
    features: FeatureMap,
    n_test: usize,
    seed: u64,
) -> Result<f64> {
    holdout_fold(w_hat, concept, features, n_test, seed, |pred, y| (pred - y) * (pred - y))
}

fn predict_label(raw: f64) -> f64 {
    crate::estimators::sign_label(raw)
}

fn holdout_fold(
    w_hat: &[f64],
    concept: &Concept,
    features: FeatureMap,
    n_test: usize,
    seed: u64,
    score: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::param("holdout_size", "must be >= 1"));
    }
    let mut rng = seed::rng(seed);
    let mut total = 0.0;
    for _ in 0..n_test {
        let s = concept.draw(&mut rng);
        let x = features.apply(&s.x);
        let raw = predict(w_hat, &x, Task::Regression)?;
        total += score(raw, s.y);
    }
    Ok(total / n_test as f64)
}
