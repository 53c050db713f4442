use alloc::vec::Vec;

use crate::estimators::{ModelState, Recursion};
use crate::linalg::{norm, spectral_norm, sub};
use crate::oracle::{gaussian_bounding_constant, estimate_error_bound, BoundParams, BoundTerms, RecurrenceTracker};
use crate::seed::{derive_seed, MONTE_CARLO};
use crate::streams::{default_w0, gen_drifting_linear, LabeledTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonteCarloConfig {
    pub d: usize,
    pub n: usize,
    pub runs: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub mu: f64,
    pub delta: f64,
    pub p0_scale: f64,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            d: 5,
            n: 5_000,
            runs: 200,
            gamma: 1e-3,
            sigma: 0.1,
            mu: 0.01,
            delta: 0.05,
            p0_scale: 1.0,
            seed: 0,
        }
    }
}

impl MonteCarloConfig {
    pub const MIN_RUNS: usize = 50;
}

/// Final estimate error of one run against the bound built from the run's
/// realized constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunCheck {
    pub error_norm: f64,
    pub params: BoundParams,
    pub bound: BoundTerms,
    /// Largest residual of the `R(t) w̃(t)` recurrence over the run.
    pub recurrence_residual: f64,
}

impl RunCheck {
    pub fn covered_at(&self, scale: f64) -> bool {
        self.error_norm <= scale * self.bound.total
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub runs: Vec<RunCheck>,
    /// Fraction of runs whose final error lies within the bound.
    pub coverage: f64,
    pub max_recurrence_residual: f64,
}

impl MonteCarloReport {
    /// Coverage of the bound multiplied by `scale`.
    pub fn coverage_at(&self, scale: f64) -> f64 {
        let hits = self.runs.iter().filter(|r| r.covered_at(scale)).count();
        hits as f64 / self.runs.len() as f64
    }

    /// Smallest multiplier of the bound that still covers every run.
    pub fn tightness(&self) -> f64 {
        self.runs
            .iter()
            .map(|r| r.error_norm / r.bound.total)
            .fold(0.0, f64::max)
    }
}

/// Runs the constant-forgetting estimator over a drifting-linear trace and
/// evaluates the bound at the final step with `K`, `x*` taken from the run
/// and the Gaussian bounding constants for `sigma` and `gamma`.
pub fn realized_bound_check(
    trace: &LabeledTrace,
    mu: f64,
    p0_scale: f64,
    gamma: f64,
    sigma: f64,
    delta: f64,
) -> Result<RunCheck> {
    let truth = trace
        .truth
        .as_ref()
        .ok_or(Error::MissingTruth("bound check needs w/s/eps columns"))?;
    if trace.is_empty() {
        return Err(Error::DegenerateInput("empty trace"));
    }
    let d = trace.dim();
    let mut state = ModelState::new(d, mu, p0_scale)?;
    let mut tracker = RecurrenceTracker::new(state.p(), mu)?;
    let mut k = 0.0f64;
    let mut x_star = 0.0f64;
    for (sample, g) in trace.samples.iter().zip(truth) {
        let w_hat_prev = state.w_hat().to_vec();
        state.dfop_step(sample, Recursion::Consistent)?;
        tracker.observe(
            &sample.x,
            g.eps,
            &g.s,
            &g.w,
            &g.w_after(),
            &w_hat_prev,
            state.w_hat(),
            state.p(),
        )?;
        k = k.max(spectral_norm(state.p()));
        x_star = x_star.max(norm(&sample.x));
    }
    let last = &truth[truth.len() - 1];
    let params = BoundParams {
        k,
        x_star,
        sigma_star: x_star * gaussian_bounding_constant(sigma, 1),
        gamma_star: gaussian_bounding_constant(gamma, d),
        r0_norm: 1.0 / p0_scale,
        w_tilde0_norm: norm(&truth[0].w),
        mu,
        t: trace.len() as u64,
        delta,
    };
    Ok(RunCheck {
        error_norm: norm(&sub(&last.w_after(), state.w_hat())),
        bound: estimate_error_bound(&params)?,
        params,
        recurrence_residual: tracker.max_residual(),
    })
}

/// Seeded trace of run `i`.
pub fn montecarlo_trace(cfg: &MonteCarloConfig, i: usize) -> Result<LabeledTrace> {
    let seed = derive_seed(cfg.seed, MONTE_CARLO + i as u64);
    gen_drifting_linear(cfg.d, cfg.n, cfg.gamma, cfg.sigma, seed, &default_w0(cfg.d))
}

pub fn validate_montecarlo(cfg: &MonteCarloConfig) -> Result<()> {
    if cfg.runs < MonteCarloConfig::MIN_RUNS {
        return Err(Error::param("runs", "at least 50 runs are needed"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    Ok(())
}

pub fn montecarlo_report(cfg: &MonteCarloConfig, runs: Vec<RunCheck>) -> MonteCarloReport {
    let covered = runs.iter().filter(|r| r.covered_at(1.0)).count();
    let max_recurrence_residual = runs.iter().map(|r| r.recurrence_residual).fold(0.0, f64::max);
    MonteCarloReport {
        config: cfg.clone(),
        coverage: covered as f64 / runs.len().max(1) as f64,
        max_recurrence_residual,
        runs,
    }
}

/// Empirical coverage of the bound over `cfg.runs` independent traces.
pub fn bound_montecarlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    validate_montecarlo(cfg)?;
    let runs = (0..cfg.runs)
        .map(|i| {
            let trace = montecarlo_trace(cfg, i)?;
            realized_bound_check(&trace, cfg.mu, cfg.p0_scale, cfg.gamma, cfg.sigma, cfg.delta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(montecarlo_report(cfg, runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_runs_rejected() {
        let cfg = MonteCarloConfig {
            runs: 10,
            ..MonteCarloConfig::default()
        };
        assert!(matches!(
            bound_montecarlo(&cfg),
            Err(Error::InvalidParameter { name: "runs", .. })
        ));
    }

    #[test]
    fn noiseless_runs_always_covered() {
        let cfg = MonteCarloConfig {
            n: 300,
            runs: 50,
            gamma: 0.0,
            sigma: 0.0,
            ..MonteCarloConfig::default()
        };
        let report = bound_montecarlo(&cfg).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert!(report.max_recurrence_residual < 1e-9);
        for r in &report.runs {
            assert_eq!(r.bound.noise, 0.0);
            assert_eq!(r.bound.drift, 0.0);
        }
    }
}
