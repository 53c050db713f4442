//! Single runs: trace loading, estimator construction, resume from a
//! snapshot, and the run directory (`config.toml`, `metrics.csv`,
//! `summary.json`, `snapshot.json`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dfop_core::estimators::{
    sign_label, Dfop, Gdfop, ModelState, OnlineEstimator, PiecewiseLambda, Rls, Task, WindowLs,
};
use dfop_core::eval::{FeatureMap, HoldoutSettings, RunOutcome, RunSettings, RunSummary};
use dfop_core::seed::{derive_seed, HOLDOUT, TRACE};
use dfop_core::streams::LabeledTrace;
use serde::Serialize;

use crate::config::{EstimatorKind, RunConfig, TaskChoice};
use crate::csv_io::read_csv_stream;
use crate::error::{AppError, Result};

/// Keeps the first `n` samples and their side columns.
pub fn truncate(trace: &mut LabeledTrace, n: usize) {
    trace.samples.truncate(n);
    if let Some(t) = trace.truth.as_mut() {
        t.truncate(n);
    }
    if let Some(s) = trace.stages.as_mut() {
        s.truncate(n);
    }
    if let Some(l) = trace.labels.as_mut() {
        l.truncate(n);
    }
}

/// Trace for root seed `root`; synthetic streams draw it from the
/// `TRACE` child seed.
pub fn load_trace(cfg: &RunConfig, root: u64) -> Result<LabeledTrace> {
    let trace = match cfg.synthetic_spec(derive_seed(root, TRACE)) {
        Some(spec) => spec.generate()?,
        None => {
            let path = cfg
                .input
                .as_deref()
                .ok_or_else(|| AppError::usage("stream `csv` needs --input"))?;
            let mut trace = read_csv_stream(path)?;
            if let Some(n) = cfg.n {
                truncate(&mut trace, n);
            }
            trace
        }
    };
    if trace.is_empty() {
        return Err(AppError::Data("stream has no samples".into()));
    }
    Ok(trace)
}

pub fn task_for(cfg: &RunConfig, trace: &LabeledTrace) -> Task {
    match cfg.task {
        TaskChoice::Regression => Task::Regression,
        TaskChoice::Classification => Task::Classification,
        TaskChoice::Auto => match cfg.synthetic_spec(0) {
            Some(spec) => spec.task(),
            None => trace.infer_task(),
        },
    }
}

pub fn features_for(cfg: &RunConfig, trace: &LabeledTrace) -> FeatureMap {
    FeatureMap {
        intercept: cfg.intercept.unwrap_or(trace.truth.is_none()),
    }
}

/// Harness settings; the holdout draw uses the `HOLDOUT` child of `root`.
pub fn run_settings(cfg: &RunConfig, trace: &LabeledTrace, root: u64) -> RunSettings {
    RunSettings {
        task: task_for(cfg, trace),
        features: features_for(cfg, trace),
        holdout: (cfg.holdout_every > 0).then(|| HoldoutSettings {
            every: cfg.holdout_every,
            size: cfg.holdout_size,
            seed: derive_seed(root, HOLDOUT),
        }),
    }
}

/// Estimator selected by the configuration.
pub enum Model {
    Dfop(Dfop),
    Gdfop(Gdfop<PiecewiseLambda>),
    Rls(Rls),
    Window(WindowLs),
}

impl Model {
    fn schedule(cfg: &RunConfig) -> PiecewiseLambda {
        PiecewiseLambda {
            initial: cfg.lambda_or_default(),
            breakpoints: cfg.lambda_breakpoints.clone(),
        }
    }

    pub fn build(cfg: &RunConfig, d: usize) -> Result<Self> {
        Ok(match cfg.estimator {
            EstimatorKind::Dfop => Model::Dfop(Dfop::new(d, cfg.mu, cfg.p0_scale, cfg.recursion())?),
            EstimatorKind::Gdfop => Model::Gdfop(Gdfop::new(d, cfg.p0_scale, Self::schedule(cfg))?),
            EstimatorKind::Rls => Model::Rls(Rls::new(d, cfg.p0_scale)?),
            EstimatorKind::Window => Model::Window(WindowLs::new(d, cfg.window, cfg.ridge)?),
        })
    }

    /// Continues from a saved state. The windowed estimator keeps raw
    /// samples and cannot be resumed.
    pub fn resume(cfg: &RunConfig, state: ModelState) -> Result<Self> {
        Ok(match cfg.estimator {
            EstimatorKind::Dfop => {
                if state.mu() != cfg.mu {
                    return Err(AppError::usage(format!(
                        "snapshot was taken with mu = {:?}, config has mu = {:?}",
                        state.mu(),
                        cfg.mu
                    )));
                }
                Model::Dfop(Dfop::from_state(state, cfg.recursion()))
            }
            EstimatorKind::Gdfop => Model::Gdfop(Gdfop::from_state(state, Self::schedule(cfg))),
            EstimatorKind::Rls => Model::Rls(Rls::from_state(state)),
            EstimatorKind::Window => {
                return Err(AppError::usage("the window estimator cannot be resumed"))
            }
        })
    }

    pub fn estimator(&mut self) -> &mut dyn OnlineEstimator {
        match self {
            Model::Dfop(m) => m,
            Model::Gdfop(m) => m,
            Model::Rls(m) => m,
            Model::Window(m) => m,
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Model::Dfop(m) => m.weights(),
            Model::Gdfop(m) => m.weights(),
            Model::Rls(m) => m.weights(),
            Model::Window(m) => m.weights(),
        }
    }

    /// Recursive state, absent for the windowed estimator.
    pub fn state(&self) -> Option<&ModelState> {
        match self {
            Model::Dfop(m) => Some(m.state()),
            Model::Gdfop(m) => Some(m.state()),
            Model::Rls(m) => Some(m.state()),
            Model::Window(_) => None,
        }
    }
}

pub struct RunArtifacts {
    /// Number of samples consumed before this run started.
    pub start: u64,
    pub outcome: RunOutcome,
    pub model: Model,
}

/// Runs `cfg` from the beginning, or from `resume` when given, stopping
/// after sample `until` (default: end of stream).
pub fn execute(cfg: &RunConfig, resume: Option<ModelState>, until: Option<u64>) -> Result<RunArtifacts> {
    let mut trace = load_trace(cfg, cfg.seed)?;
    let settings = run_settings(cfg, &trace, cfg.seed);
    if let Some(end) = until {
        if end == 0 || end > trace.len() as u64 {
            return Err(AppError::usage(format!(
                "--until must lie in 1..={}",
                trace.len()
            )));
        }
        truncate(&mut trace, end as usize);
    }
    let d = settings.features.dim(trace.dim());
    let mut model = match resume {
        Some(state) => {
            if state.dim() != d {
                return Err(AppError::Data(format!(
                    "snapshot dimension {} does not match stream dimension {d}",
                    state.dim()
                )));
            }
            Model::resume(cfg, state)?
        }
        None => Model::build(cfg, d)?,
    };
    let start = model.estimator().steps();
    let outcome = dfop_core::eval::run_stream(&trace, model.estimator(), &settings, start as usize)?;
    Ok(RunArtifacts {
        start,
        outcome,
        model,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:?}"))
}

/// `t,y,pred_pre,pred_post,loss,aa,estimate_error,holdout`; `loss` is the
/// squared pre-update error for regression and the 0/1 pre-update error for
/// classification. Missing values are empty fields.
pub fn metrics_csv(outcome: &RunOutcome) -> String {
    let task = outcome.summary.task;
    let mut out = String::from("t,y,pred_pre,pred_post,loss,aa,estimate_error,holdout\n");
    for r in &outcome.series.records {
        let loss = match task {
            Task::Regression => (r.pred_pre - r.y).powi(2),
            Task::Classification => f64::from(u8::from(sign_label(r.pred_pre) != r.y)),
        };
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{},{},{}",
            r.t,
            r.y,
            r.pred_pre,
            r.pred_post,
            loss,
            opt(r.aa),
            opt(r.estimate_error),
            opt(r.holdout)
        );
    }
    out
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    estimator: EstimatorKind,
    first_t: u64,
    last_t: u64,
    dim: usize,
    metrics: &'a RunSummary,
    final_weights: &'a [f64],
}

pub fn summary_json(art: &RunArtifacts, cfg: &RunConfig) -> Result<String> {
    let records = &art.outcome.series.records;
    let file = SummaryFile {
        estimator: cfg.estimator,
        first_t: records.first().map_or(0, |r| r.t),
        last_t: records.last().map_or(0, |r| r.t),
        dim: art.model.weights().len(),
        metrics: &art.outcome.summary,
        final_weights: art.model.weights(),
    };
    let mut s = serde_json::to_string_pretty(&file)
        .map_err(|e| AppError::Data(format!("cannot encode summary: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn snapshot_json(state: &ModelState) -> Result<String> {
    let mut s = serde_json::to_string(state)
        .map_err(|e| AppError::Data(format!("cannot encode snapshot: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Reads and validates a snapshot; damaged files are data errors.
pub fn read_snapshot(path: &Path) -> Result<ModelState> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

pub fn write_run_dir(dir: &Path, cfg: &RunConfig, art: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    write_file(&dir.join("config.toml"), &cfg.to_toml()?)?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&art.outcome))?;
    write_file(&dir.join("summary.json"), &summary_json(art, cfg)?)?;
    if let Some(state) = art.model.state() {
        write_file(&dir.join("snapshot.json"), &snapshot_json(state)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PartialConfig, StreamKind};

    fn cfg(stream: StreamKind, n: usize) -> RunConfig {
        PartialConfig {
            stream: Some(stream),
            n: Some(n),
            ..PartialConfig::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn split_run_matches_single_run() {
        for stream in [StreamKind::Sea, StreamKind::DriftingLinear] {
            let c = cfg(stream, 600);
            let whole = execute(&c, None, None).unwrap();
            let first = execute(&c, None, Some(250)).unwrap();
            let state = first.model.state().unwrap().clone();
            let second = execute(&c, Some(state), None).unwrap();
            assert_eq!(second.start, 250);
            assert_eq!(second.outcome.series.records[0].t, 251);
            let a = whole.model.state().unwrap();
            let b = second.model.state().unwrap();
            assert_eq!(a.t(), b.t());
            for (x, y) in a.w_hat().iter().zip(b.w_hat()) {
                assert!((x - y).abs() <= 1e-12);
            }
            // running accuracy restarts at the resume point
            let strip = |r: &dfop_core::eval::StepRecord| dfop_core::eval::StepRecord { aa: None, ..r.clone() };
            let a: Vec<_> = whole.outcome.series.records[250..].iter().map(strip).collect();
            let b: Vec<_> = second.outcome.series.records.iter().map(strip).collect();
            assert_eq!(a, b, "{stream:?}");
        }
    }

    #[test]
    fn defaults_pick_task_intercept_and_holdout() {
        let c = cfg(StreamKind::Sea, 100);
        let t = load_trace(&c, 0).unwrap();
        let s = run_settings(&c, &t, 0);
        assert_eq!(s.task, Task::Classification);
        assert!(s.features.intercept);
        assert!(s.holdout.is_some());
        let c = cfg(StreamKind::DriftingLinear, 100);
        let t = load_trace(&c, 0).unwrap();
        let s = run_settings(&c, &t, 0);
        assert_eq!(s.task, Task::Regression);
        assert!(!s.features.intercept);
        assert!(s.holdout.is_none());
    }

    #[test]
    fn resume_rejects_mismatched_snapshots() {
        let c = cfg(StreamKind::DriftingLinear, 50);
        let wrong_dim = ModelState::new(3, c.mu, 1.0).unwrap();
        assert_eq!(execute(&c, Some(wrong_dim), None).err().unwrap().kind(), crate::ErrorKind::Data);
        let wrong_mu = ModelState::new(5, 0.5, 1.0).unwrap();
        assert_eq!(execute(&c, Some(wrong_mu), None).err().unwrap().kind(), crate::ErrorKind::Usage);
        let done = execute(&c, None, None).unwrap().model.state().unwrap().clone();
        assert_eq!(execute(&c, Some(done), None).err().unwrap().kind(), crate::ErrorKind::Data);
    }

    #[test]
    fn frozen_model_predicts_zero() {
        let mut c = cfg(StreamKind::DriftingLinear, 40);
        c.mu = 0.0;
        let art = execute(&c, None, None).unwrap();
        assert!(art.outcome.series.records.iter().all(|r| r.pred_post == 0.0));
        assert!(art.model.weights().iter().all(|w| *w == 0.0));
    }

    #[test]
    fn metrics_csv_shape() {
        let art = execute(&cfg(StreamKind::Sea, 500), None, None).unwrap();
        let text = metrics_csv(&art.outcome);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 501);
        assert!(lines.iter().all(|l| l.split(',').count() == 8));
        assert!(lines[250].ends_with(|c: char| c.is_ascii_digit()));
        assert!(lines[1].ends_with(",,"));
    }

    #[test]
    fn snapshot_round_trip() {
        let art = execute(&cfg(StreamKind::DriftingLinear, 30), None, None).unwrap();
        let state = art.model.state().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        write_file(&p, &snapshot_json(state).unwrap()).unwrap();
        assert_eq!(&read_snapshot(&p).unwrap(), state);
        write_file(&p, "{\"d\":2,\"t\":1,\"mu\":0.1,\"p0_scale\":1.0,\"w_hat\":[0,0],\"P\":[1,0,0,-1]}").unwrap();
        assert_eq!(read_snapshot(&p).unwrap_err().kind(), crate::ErrorKind::Data);
    }
}
