//! Run configuration. Values come from command-line flags, then an optional
//! TOML file, then built-in defaults, in that order of precedence.
//!
//! The file is a flat table whose keys match the long flag names with `_`
//! in place of `-`:
//!
//! ```toml
//! stream = "drifting_linear"
//! n = 20000
//! d = 5
//! estimator = "dfop"
//! mu = 0.001
//! mu_grid = [0.0001, 0.001, 0.01]
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dfop_core::eval::{recommend_mu, EstimatorChoice};
use dfop_core::estimators::Recursion;
use dfop_core::streams::{SyntheticKind, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StreamKind {
    Sea,
    HyperplaneCls,
    HyperplaneReg,
    DriftingLinear,
    Csv,
}

impl StreamKind {
    pub fn default_n(self) -> Option<usize> {
        match self {
            StreamKind::Sea => Some(dfop_core::streams::SEA_DEFAULT_N),
            StreamKind::HyperplaneCls => Some(dfop_core::streams::HYPERPLANE_CLS_DEFAULT_N),
            StreamKind::HyperplaneReg => Some(dfop_core::streams::HYPERPLANE_REG_DEFAULT_N),
            StreamKind::DriftingLinear => Some(20_000),
            StreamKind::Csv => None,
        }
    }

    /// Whether the generator can draw fresh samples for holdout evaluation.
    pub fn has_concepts(self) -> bool {
        matches!(
            self,
            StreamKind::Sea | StreamKind::HyperplaneCls | StreamKind::HyperplaneReg
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum EstimatorKind {
    Dfop,
    Gdfop,
    Rls,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TaskChoice {
    /// Classification for SEA and hyperplane_cls, otherwise inferred from
    /// the targets.
    Auto,
    Regression,
    Classification,
}

pub const DEFAULT_MU_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 0.5];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Every setting optional; used for both the file and the flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub stream: Option<StreamKind>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub noise_rate: Option<f64>,
    pub d: Option<usize>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub input: Option<PathBuf>,
    pub estimator: Option<EstimatorKind>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    /// `[[start_step, lambda], ...]` for the generalized estimator.
    pub lambda_breakpoints: Option<Vec<(u64, f64)>>,
    pub window: Option<usize>,
    pub ridge: Option<f64>,
    pub p0_scale: Option<f64>,
    pub paper_literal_recursion: Option<bool>,
    pub task: Option<TaskChoice>,
    pub intercept: Option<bool>,
    pub holdout_every: Option<usize>,
    pub holdout_size: Option<usize>,
    pub mu_grid: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        PartialConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl PartialConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Parse {
            path: origin.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// Settings present in `top` replace those in `self`.
    pub fn overlay(self, top: PartialConfig) -> PartialConfig {
        let base = self;
        overlay_fields!(base, top;
            stream, n, seed, noise_rate, d, gamma, sigma, input, estimator, mu, lambda,
            lambda_breakpoints, window, ridge, p0_scale, paper_literal_recursion, task,
            intercept, holdout_every, holdout_size, mu_grid, seeds, out)
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let stream = self.stream.unwrap_or(StreamKind::Sea);
        if stream == StreamKind::Csv && self.input.is_none() {
            return Err(AppError::usage("stream `csv` needs --input"));
        }
        if stream != StreamKind::Csv && self.input.is_some() {
            return Err(AppError::usage("--input is only used with --stream csv"));
        }
        if self.n == Some(0) {
            return Err(AppError::usage("n must be >= 1"));
        }
        let cfg = RunConfig {
            stream,
            n: self.n.or(stream.default_n()),
            seed: self.seed.unwrap_or(0),
            noise_rate: self.noise_rate.unwrap_or(0.0),
            d: self.d.unwrap_or(5),
            gamma: self.gamma.unwrap_or(1e-3),
            sigma: self.sigma.unwrap_or(0.1),
            input: self.input,
            estimator: self.estimator.unwrap_or(EstimatorKind::Dfop),
            mu: match self.mu {
                Some(mu) => mu,
                None => recommend_mu(1_000.0)?,
            },
            lambda: self.lambda,
            lambda_breakpoints: self.lambda_breakpoints.unwrap_or_default(),
            window: self.window.unwrap_or(1_000),
            ridge: self.ridge.unwrap_or(1e-8),
            p0_scale: self.p0_scale.unwrap_or(1e3),
            paper_literal_recursion: self.paper_literal_recursion.unwrap_or(false),
            task: self.task.unwrap_or(TaskChoice::Auto),
            intercept: self.intercept,
            holdout_every: self
                .holdout_every
                .unwrap_or(if stream.has_concepts() { 250 } else { 0 }),
            holdout_size: self.holdout_size.unwrap_or(1_000),
            mu_grid: self.mu_grid.unwrap_or_else(|| DEFAULT_MU_GRID.to_vec()),
            seeds: self.seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved settings; echoed as `config.toml` in every run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub stream: StreamKind,
    /// `None` reads the whole CSV input.
    pub n: Option<usize>,
    pub seed: u64,
    pub noise_rate: f64,
    pub d: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub input: Option<PathBuf>,
    pub estimator: EstimatorKind,
    pub mu: f64,
    /// `None` means `1 - mu`.
    pub lambda: Option<f64>,
    pub lambda_breakpoints: Vec<(u64, f64)>,
    pub window: usize,
    pub ridge: f64,
    pub p0_scale: f64,
    pub paper_literal_recursion: bool,
    pub task: TaskChoice,
    /// `None` appends a constant feature exactly when the trace carries no
    /// true weights.
    pub intercept: Option<bool>,
    /// `0` disables holdout evaluation.
    pub holdout_every: usize,
    pub holdout_size: usize,
    pub mu_grid: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        PartialConfig::default()
            .resolve()
            .expect("defaults are valid")
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let finite = [
            ("noise_rate", self.noise_rate),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("ridge", self.ridge),
            ("p0_scale", self.p0_scale),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(AppError::usage(format!("{name} must be finite")));
            }
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(AppError::usage("mu must lie in [0, 1)"));
        }
        let lambdas = self
            .lambda
            .iter()
            .chain(self.lambda_breakpoints.iter().map(|(_, l)| l));
        for &l in lambdas {
            if !(l > 0.0 && l <= 1.0) {
                return Err(AppError::usage("lambda must lie in (0, 1]"));
            }
        }
        if self
            .lambda_breakpoints
            .windows(2)
            .any(|w| w[1].0 <= w[0].0)
        {
            return Err(AppError::usage(
                "lambda_breakpoints must be sorted by strictly increasing step",
            ));
        }
        if self.holdout_every > 0 && self.holdout_size == 0 {
            return Err(AppError::usage("holdout_size must be >= 1"));
        }
        Ok(())
    }

    pub fn recursion(&self) -> Recursion {
        if self.paper_literal_recursion {
            Recursion::PaperLiteral
        } else {
            Recursion::Consistent
        }
    }

    pub fn lambda_or_default(&self) -> f64 {
        self.lambda.unwrap_or(1.0 - self.mu)
    }

    pub fn estimator_choice(&self) -> EstimatorChoice {
        match self.estimator {
            EstimatorKind::Dfop => EstimatorChoice::Dfop {
                mu: self.mu,
                recursion: self.recursion(),
            },
            EstimatorKind::Gdfop => EstimatorChoice::Gdfop {
                lambda: self.lambda_or_default(),
            },
            EstimatorKind::Rls => EstimatorChoice::Rls,
            EstimatorKind::Window => EstimatorChoice::Window {
                size: self.window,
                ridge: self.ridge,
            },
        }
    }

    /// Generator settings with the given trace seed; `None` for CSV input.
    pub fn synthetic_spec(&self, trace_seed: u64) -> Option<SyntheticSpec> {
        let kind = match self.stream {
            StreamKind::Sea => SyntheticKind::Sea {
                noise_rate: self.noise_rate,
            },
            StreamKind::HyperplaneCls => SyntheticKind::HyperplaneCls,
            StreamKind::HyperplaneReg => SyntheticKind::HyperplaneReg,
            StreamKind::DriftingLinear => SyntheticKind::DriftingLinear {
                d: self.d,
                gamma: self.gamma,
                sigma: self.sigma,
                w0: None,
            },
            StreamKind::Csv => return None,
        };
        Some(SyntheticSpec {
            kind,
            n: self.n?,
            seed: trace_seed,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| AppError::Data(format!("cannot encode config: {e}")))
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message: e.message().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PartialConfig> {
        PartialConfig::from_toml_str(text, Path::new("cfg.toml"))
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.stream, StreamKind::Sea);
        assert_eq!(c.n, Some(50_000));
        assert_eq!(c.mu, 1e-3);
        assert_eq!(c.p0_scale, 1e3);
        assert_eq!(c.holdout_every, 250);
        assert_eq!(c.estimator_choice(), EstimatorChoice::Dfop {
            mu: 1e-3,
            recursion: Recursion::Consistent
        });
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = parse("stream = \"drifting_linear\"\nmu = 0.2\nn = 300\n").unwrap();
        let flags = PartialConfig {
            mu: Some(0.05),
            ..PartialConfig::default()
        };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!(c.mu, 0.05);
        assert_eq!(c.n, Some(300));
        assert_eq!(c.stream, StreamKind::DriftingLinear);
        assert_eq!(c.holdout_every, 0);
        assert_eq!(c.d, 5);
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_line() {
        let err = parse("n = 3\nbogus = 1\n").unwrap_err();
        match err {
            AppError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for text in [
            "mu = 1.0",
            "stream = \"csv\"",
            "n = 0",
            "lambda = 0.0",
            "lambda_breakpoints = [[5, 0.9], [5, 0.8]]",
            "input = \"x.csv\"",
        ] {
            let err = parse(text).unwrap().resolve().unwrap_err();
            assert_eq!(err.kind(), crate::ErrorKind::Usage, "{text}");
        }
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let c = PartialConfig {
            stream: Some(StreamKind::Csv),
            input: Some(PathBuf::from("a.csv")),
            lambda_breakpoints: Some(vec![(10, 0.9), (20, 0.99)]),
            mu: Some(0.1 + 0.2),
            ..PartialConfig::default()
        }
        .resolve()
        .unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text, Path::new("c")).unwrap(), c);
    }
}
