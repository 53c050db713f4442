//! Metrics, the prequential run harness, mu sweeps and bound coverage checks.

mod harness;
mod metrics;
mod montecarlo;
mod sweep;

use alloc::vec::Vec;

pub use harness::{run_stream, HoldoutSettings, MetricSeries, RunOutcome, RunSettings, RunSummary, StepRecord};
pub use metrics::{
    accumulated_accuracy, estimate_error_series, holdout_accuracy, holdout_mse, inverse_e, mse,
    recommend_mu, robustness, weight_after_one_period,
};
pub use montecarlo::{
    bound_montecarlo, montecarlo_report, montecarlo_trace, realized_bound_check,
    validate_montecarlo, MonteCarloConfig, MonteCarloReport, RunCheck,
};
pub use sweep::{
    build_estimator, mu_sweep, sweep_cell, sweep_trace, validate_grid, EstimatorChoice, Stat,
    SweepCell, SweepConfig, SweepResult, SweepRow,
};

/// Optional constant feature appended after the raw features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureMap {
    pub intercept: bool,
}

impl FeatureMap {
    pub fn dim(&self, raw_dim: usize) -> usize {
        raw_dim + usize::from(self.intercept)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim(x.len()));
        out.extend_from_slice(x);
        if self.intercept {
            out.push(1.0);
        }
        out
    }
}
