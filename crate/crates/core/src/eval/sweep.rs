use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::estimators::{ConstantLambda, Dfop, Gdfop, OnlineEstimator, Recursion, Rls, WindowLs};
use crate::math::sqrt;
use crate::seed::{derive_seed, HOLDOUT, TRACE};
use crate::streams::{LabeledTrace, SyntheticSpec};
use crate::{Error, Result};

use super::harness::{run_stream, RunSettings, RunSummary};

/// Estimator family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorChoice {
    Dfop { mu: f64, recursion: Recursion },
    Gdfop { lambda: f64 },
    Rls,
    Window { size: usize, ridge: f64 },
}

impl EstimatorChoice {
    /// Same family with the forgetting factor replaced; `lambda = 1 - mu` for
    /// the generalized recursion, unchanged for the others.
    pub fn with_mu(self, mu: f64) -> Self {
        match self {
            EstimatorChoice::Dfop { recursion, .. } => EstimatorChoice::Dfop { mu, recursion },
            EstimatorChoice::Gdfop { .. } => EstimatorChoice::Gdfop { lambda: 1.0 - mu },
            other => other,
        }
    }
}

pub fn build_estimator(
    choice: EstimatorChoice,
    d: usize,
    p0_scale: f64,
) -> Result<Box<dyn OnlineEstimator + Send>> {
    Ok(match choice {
        EstimatorChoice::Dfop { mu, recursion } => Box::new(Dfop::new(d, mu, p0_scale, recursion)?),
        EstimatorChoice::Gdfop { lambda } => {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::param("lambda", "must lie in (0, 1]"));
            }
            Box::new(Gdfop::new(d, p0_scale, ConstantLambda(lambda))?)
        }
        EstimatorChoice::Rls => Box::new(Rls::new(d, p0_scale)?),
        EstimatorChoice::Window { size, ridge } => Box::new(WindowLs::new(d, size, ridge)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub stream: SyntheticSpec,
    pub estimator: EstimatorChoice,
    pub p0_scale: f64,
    /// Holdout seeds are replaced per cell.
    pub settings: RunSettings,
}

/// One `(mu, seed)` run. Failed runs keep their error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub mu: f64,
    pub seed: u64,
    pub outcome: core::result::Result<RunSummary, Error>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Option<Stat> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            sqrt(ss / (count - 1) as f64)
        } else {
            0.0
        };
        Some(Stat { mean, std, count })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub mu: f64,
    pub ok: usize,
    pub failed: usize,
    pub prequential_accuracy: Option<Stat>,
    pub holdout_mean: Option<Stat>,
    pub prequential_mse: Option<Stat>,
    pub final_quarter_accuracy: Option<Stat>,
    pub final_quarter_mse: Option<Stat>,
    pub final_quarter_estimate_error: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub rows: Vec<SweepRow>,
}

fn stat_of(summaries: &[&RunSummary], f: impl Fn(&RunSummary) -> Option<f64>) -> Option<Stat> {
    let values: Option<Vec<f64>> = summaries.iter().map(|s| f(s)).collect();
    Stat::from_values(&values?)
}

impl SweepResult {
    /// Aggregates cells into one row per grid value, in grid order.
    pub fn from_cells(mu_grid: &[f64], cells: Vec<SweepCell>) -> Self {
        let rows = mu_grid
            .iter()
            .map(|&mu| {
                let here: Vec<&SweepCell> = cells.iter().filter(|c| c.mu == mu).collect();
                let ok: Vec<&RunSummary> = here.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
                SweepRow {
                    mu,
                    ok: ok.len(),
                    failed: here.len() - ok.len(),
                    prequential_accuracy: stat_of(&ok, |s| s.prequential_accuracy),
                    holdout_mean: stat_of(&ok, |s| s.holdout_mean),
                    prequential_mse: stat_of(&ok, |s| Some(s.prequential_mse)),
                    final_quarter_accuracy: stat_of(&ok, |s| s.final_quarter_accuracy),
                    final_quarter_mse: stat_of(&ok, |s| Some(s.final_quarter_mse)),
                    final_quarter_estimate_error: stat_of(&ok, |s| s.final_quarter_estimate_error),
                }
            })
            .collect();
        SweepResult { cells, rows }
    }
}

/// Trace for root seed `seed`, as used by every cell of that seed.
pub fn sweep_trace(cfg: &SweepConfig, seed: u64) -> Result<LabeledTrace> {
    cfg.stream.with_seed(derive_seed(seed, TRACE)).generate()
}

/// Runs one grid cell on a pre-generated trace. The holdout seed is derived
/// from the cell's root `seed`.
pub fn sweep_cell(
    estimator: EstimatorChoice,
    p0_scale: f64,
    settings: &RunSettings,
    trace: &LabeledTrace,
    mu: f64,
    seed: u64,
) -> SweepCell {
    let outcome = (|| {
        let d = settings.features.dim(trace.dim());
        let mut est = build_estimator(estimator.with_mu(mu), d, p0_scale)?;
        let mut settings = settings.clone();
        if let Some(h) = settings.holdout.as_mut() {
            h.seed = derive_seed(seed, HOLDOUT);
        }
        run_stream(trace, est.as_mut(), &settings, 0).map(|o| o.summary)
    })();
    SweepCell { mu, seed, outcome }
}

pub fn validate_grid(mu_grid: &[f64], seeds: &[u64]) -> Result<()> {
    if mu_grid.is_empty() {
        return Err(Error::param("mu_grid", "must not be empty"));
    }
    if seeds.is_empty() {
        return Err(Error::param("seeds", "must not be empty"));
    }
    Ok(())
}

/// Every `(mu, seed)` combination, sequentially. A cell whose run fails is
/// kept with its error instead of aborting the sweep.
pub fn mu_sweep(cfg: &SweepConfig, mu_grid: &[f64], seeds: &[u64]) -> Result<SweepResult> {
    validate_grid(mu_grid, seeds)?;
    let mut cells = Vec::with_capacity(mu_grid.len() * seeds.len());
    for &seed in seeds {
        let trace = sweep_trace(cfg, seed)?;
        for &mu in mu_grid {
            cells.push(sweep_cell(cfg.estimator, cfg.p0_scale, &cfg.settings, &trace, mu, seed));
        }
    }
    Ok(SweepResult::from_cells(mu_grid, cells))
}
