//! Estimate-error bound: direct evaluation, evaluation against a recorded
//! run, and Monte-Carlo coverage.

use std::path::Path;

use dfop_core::eval::{
    montecarlo_report, montecarlo_trace, realized_bound_check, validate_montecarlo, MonteCarloConfig,
    MonteCarloReport, RunCheck,
};
use dfop_core::oracle::{estimate_error_bound, BoundParams, BoundTerms};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EstimatorKind, RunConfig};
use crate::error::{AppError, Result};
use crate::runner::load_trace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub bound: BoundTerms,
}

pub fn evaluate(params: BoundParams) -> Result<BoundReport> {
    Ok(BoundReport {
        bound: estimate_error_bound(&params)?,
        params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDirReport {
    /// Whether the final estimate error lies within the bound.
    pub covered: bool,
    #[serde(flatten)]
    pub check: RunCheck,
}

/// Re-runs the stream recorded in `dir/config.toml` and compares the final
/// estimate error with the bound built from that run's constants.
pub fn from_run_dir(dir: &Path, delta: f64) -> Result<RunDirReport> {
    let path = dir.join("config.toml");
    let text = std::fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    let cfg = RunConfig::from_toml(&text, &path)?;
    if cfg.estimator != EstimatorKind::Dfop || cfg.paper_literal_recursion {
        return Err(AppError::usage(
            "the bound applies to the dfop estimator with the default recursion",
        ));
    }
    let trace = load_trace(&cfg, cfg.seed)?;
    if trace.truth.is_none() {
        return Err(AppError::Data(
            "the recorded stream has no true weights (w/s/eps columns)".into(),
        ));
    }
    let check = realized_bound_check(&trace, cfg.mu, cfg.p0_scale, cfg.gamma, cfg.sigma, delta)?;
    Ok(RunDirReport {
        covered: check.covered_at(1.0),
        check,
    })
}

/// Same as [`dfop_core::eval::bound_montecarlo`], with runs in parallel.
pub fn montecarlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    validate_montecarlo(cfg)?;
    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let trace = montecarlo_trace(cfg, i)?;
            realized_bound_check(&trace, cfg.mu, cfg.p0_scale, cfg.gamma, cfg.sigma, cfg.delta)
        })
        .collect::<dfop_core::Result<Vec<_>>>()?;
    Ok(montecarlo_report(cfg, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub coverage: f64,
    pub max_recurrence_residual: f64,
    /// Largest ratio of realized error to bound.
    pub tightness: f64,
    /// Bound decomposition averaged over runs.
    pub mean_bound: BoundTerms,
}

impl From<&MonteCarloReport> for MonteCarloSummary {
    fn from(r: &MonteCarloReport) -> Self {
        let n = r.runs.len().max(1) as f64;
        let avg = |f: fn(&BoundTerms) -> f64| r.runs.iter().map(|c| f(&c.bound)).sum::<f64>() / n;
        MonteCarloSummary {
            mean_bound: BoundTerms {
                k: avg(|b| b.k),
                initialization: avg(|b| b.initialization),
                noise: avg(|b| b.noise),
                drift: avg(|b| b.drift),
                total: avg(|b| b.total),
            },
            runs: r.runs.len(),
            coverage: r.coverage,
            max_recurrence_residual: r.max_recurrence_residual,
            tightness: r.tightness(),
        }
    }
}
