use alloc::vec::Vec;

use crate::estimators::{sign_label, OnlineEstimator, Sample, Task};
use crate::linalg::{norm, sub};
use crate::seed::derive_seed;
use crate::streams::LabeledTrace;
use crate::{Error, Result};

use super::metrics::{holdout_accuracy, holdout_mse};
use super::FeatureMap;

/// Fresh-sample evaluation every `every` steps on `size` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoldoutSettings {
    pub every: usize,
    pub size: usize,
    /// Root seed; the draw at step `t` uses `derive_seed(seed, t)`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSettings {
    pub task: Task,
    pub features: FeatureMap,
    pub holdout: Option<HoldoutSettings>,
}

impl RunSettings {
    pub fn new(task: Task) -> Self {
        RunSettings {
            task,
            features: FeatureMap::default(),
            holdout: None,
        }
    }
}

/// Per-step record. Predictions are raw scores `ŵᵀx`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    /// 1-based position in the stream.
    pub t: u64,
    pub y: f64,
    /// Prediction by the weights before consuming the sample.
    pub pred_pre: f64,
    /// Prediction by the weights after consuming the sample.
    pub pred_post: f64,
    /// Running prequential accuracy (classification only).
    pub aa: Option<f64>,
    pub estimate_error: Option<f64>,
    pub holdout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub records: Vec<StepRecord>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn holdout_points(&self) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.holdout.map(|h| (r.t, h)))
            .collect()
    }

    pub fn estimate_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.estimate_error).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    pub n: usize,
    pub task: Task,
    /// Fraction of pre-update sign predictions that match the label.
    pub prequential_accuracy: Option<f64>,
    /// Same, using the weights after each update.
    pub post_update_accuracy: Option<f64>,
    pub prequential_mse: f64,
    pub post_update_mse: f64,
    pub holdout_mean: Option<f64>,
    pub holdout_points: usize,
    pub mean_estimate_error: Option<f64>,
    /// Metrics restricted to the last quarter of the run.
    pub final_quarter_accuracy: Option<f64>,
    pub final_quarter_mse: f64,
    pub final_quarter_estimate_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub series: MetricSeries,
    pub summary: RunSummary,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn summarize(records: &[StepRecord], task: Task) -> RunSummary {
    let n = records.len();
    let tail = &records[n - (n / 4).max(1)..];
    let hit = |pred: f64, y: f64| if sign_label(pred) == y { 1.0 } else { 0.0 };
    let acc = |rs: &[StepRecord], post: bool| match task {
        Task::Classification => mean(rs.iter().map(|r| hit(if post { r.pred_post } else { r.pred_pre }, r.y))),
        Task::Regression => None,
    };
    let sq = |rs: &[StepRecord], post: bool| {
        mean(rs.iter().map(|r| {
            let e = if post { r.pred_post } else { r.pred_pre } - r.y;
            e * e
        }))
        .unwrap_or(f64::NAN)
    };
    let est = |rs: &[StepRecord]| -> Option<f64> {
        let errs: Option<Vec<f64>> = rs.iter().map(|r| r.estimate_error).collect();
        mean(errs?.into_iter())
    };
    let holdouts: Vec<f64> = records.iter().filter_map(|r| r.holdout).collect();
    RunSummary {
        n,
        task,
        prequential_accuracy: acc(records, false),
        post_update_accuracy: acc(records, true),
        prequential_mse: sq(records, false),
        post_update_mse: sq(records, true),
        holdout_mean: mean(holdouts.iter().copied()),
        holdout_points: holdouts.len(),
        mean_estimate_error: est(records),
        final_quarter_accuracy: acc(tail, false),
        final_quarter_mse: sq(tail, false),
        final_quarter_estimate_error: est(tail),
    }
}

/// Feeds `trace[start..]` through `estimator`, recording predictions before
/// and after every update, running accuracy, estimate error when the trace
/// carries true weights of matching dimension, and periodic holdout scores.
///
/// Holdout needs the per-stage concepts; requesting it on a trace without
/// them reports [`Error::MissingTruth`].
pub fn run_stream(
    trace: &LabeledTrace,
    estimator: &mut dyn OnlineEstimator,
    settings: &RunSettings,
    start: usize,
) -> Result<RunOutcome> {
    if start >= trace.len() {
        return Err(Error::DegenerateInput("nothing to run: start is past the end of the stream"));
    }
    let d = settings.features.dim(trace.dim());
    if estimator.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: estimator.dim(),
            found: d,
        });
    }
    if let Some(h) = &settings.holdout {
        if h.every == 0 || h.size == 0 {
            return Err(Error::param("holdout", "cadence and size must be >= 1"));
        }
        if trace.concepts.is_empty() {
            return Err(Error::MissingTruth("holdout evaluation needs stage concepts"));
        }
    }
    let truth = trace
        .truth
        .as_deref()
        .filter(|t| t.first().is_some_and(|g| g.w.len() == d));
    let mut records = Vec::with_capacity(trace.len() - start);
    let mut correct = 0u64;
    for (i, raw) in trace.samples.iter().enumerate().skip(start) {
        if settings.task == Task::Classification && raw.y != 1.0 && raw.y != -1.0 {
            return Err(Error::InvalidLabel(raw.y));
        }
        let sample = Sample::new(settings.features.apply(&raw.x), raw.y);
        let pred_pre = estimator.predict_raw(&sample.x);
        let out = estimator.update(&sample)?;
        let t = (i + 1) as u64;
        let aa = match settings.task {
            Task::Classification => {
                if sign_label(pred_pre) == raw.y {
                    correct += 1;
                }
                Some(correct as f64 / (i + 1 - start) as f64)
            }
            Task::Regression => None,
        };
        let estimate_error = truth.map(|g| norm(&sub(&g[i].w_after(), estimator.weights())));
        let holdout = match &settings.holdout {
            Some(h) if (i + 1) % h.every == 0 => {
                let concept = trace.concept_at(i)?;
                let seed = derive_seed(h.seed, t);
                Some(match concept.task() {
                    Task::Classification => {
                        holdout_accuracy(estimator.weights(), concept, settings.features, h.size, seed)?
                    }
                    Task::Regression => {
                        holdout_mse(estimator.weights(), concept, settings.features, h.size, seed)?
                    }
                })
            }
            _ => None,
        };
        records.push(StepRecord {
            t,
            y: raw.y,
            pred_pre,
            pred_post: out.prediction_raw,
            aa,
            estimate_error,
            holdout,
        });
    }
    let summary = summarize(&records, settings.task);
    Ok(RunOutcome {
        series: MetricSeries { records },
        summary,
    })
}
