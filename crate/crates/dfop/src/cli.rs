//! Argument parsing and subcommand dispatch for the `dfop` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use dfop_core::estimators::Recursion;
use dfop_core::eval::MonteCarloConfig;
use dfop_core::oracle::BoundParams;

use crate::bound;
use crate::config::{EstimatorKind, PartialConfig, RunConfig, StreamKind, TaskChoice};
use crate::csv_io::write_csv_to;
use crate::error::{AppError, Result};
use crate::runner::{self, read_snapshot};
use crate::sweep;
use crate::verify;

#[derive(Parser, Debug)]
#[command(
    name = "dfop",
    version,
    about = "Forgetting-factor least squares for drifting streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic stream as CSV
    Generate(GenerateArgs),
    /// Run one estimator over a stream and write a run directory
    Run(RunArgs),
    /// Run every (mu, seed) combination
    Sweep(SweepArgs),
    /// Check the estimator against its closed-form and generalized references
    Verify(VerifyArgs),
    /// Evaluate the estimate-error bound
    Bound(BoundArgs),
}

#[derive(Args, Debug, Default)]
pub struct StreamFlags {
    /// TOML file with default settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub stream: Option<StreamKind>,
    /// Number of samples
    #[arg(long)]
    pub n: Option<usize>,
    /// Root seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label-flip probability for SEA
    #[arg(long)]
    pub noise_rate: Option<f64>,
    /// Dimension of drifting_linear
    #[arg(long)]
    pub d: Option<usize>,
    /// Drift standard deviation of drifting_linear
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Noise standard deviation of drifting_linear
    #[arg(long)]
    pub sigma: Option<f64>,
    /// CSV file for `--stream csv`
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Discount of the generalized estimator (default 1 - mu)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Window length of the sliding-window estimator
    #[arg(long)]
    pub window: Option<usize>,
    /// Ridge term of the sliding-window estimator
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Initial P = p0_scale * I
    #[arg(long)]
    pub p0_scale: Option<f64>,
    /// Use the alternative covariance denominator (diverges; for comparison)
    #[arg(long)]
    pub paper_literal_recursion: bool,
    #[arg(long, value_enum)]
    pub task: Option<TaskChoice>,
    /// Append a constant feature (default: when the stream has no true weights)
    #[arg(long)]
    pub intercept: Option<bool>,
    /// Holdout cadence in samples; 0 disables
    #[arg(long)]
    pub holdout_every: Option<usize>,
    /// Fresh samples per holdout evaluation
    #[arg(long)]
    pub holdout_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub stream: StreamFlags,
    /// Output CSV (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub stream: StreamFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Run directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from a snapshot.json written by an earlier run
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many samples of the stream
    #[arg(long)]
    pub until: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub stream: StreamFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Comma-separated forgetting factors
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    /// Comma-separated root seeds
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Root seed of the check configurations
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check the alternative covariance denominator instead
    #[arg(long)]
    pub paper_literal_recursion: bool,
    /// Also validate a model snapshot
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Print JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Evaluate against the run recorded in this directory
    #[arg(long, conflicts_with = "montecarlo")]
    pub run_dir: Option<PathBuf>,
    /// Estimate coverage over independent drifting_linear runs
    #[arg(long)]
    pub montecarlo: bool,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Bound on the spectral norm of P
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x_star: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_star: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma_star: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r0_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_tilde0_norm: f64,
    /// Step at which the bound is evaluated
    #[arg(long, default_value_t = 1_000)]
    pub t: u64,
    /// Monte-Carlo runs
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub p0_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the full JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl StreamFlags {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            stream: self.stream,
            n: self.n,
            seed: self.seed,
            noise_rate: self.noise_rate,
            d: self.d,
            gamma: self.gamma,
            sigma: self.sigma,
            input: self.input.clone(),
            ..PartialConfig::default()
        }
    }
}

impl ModelFlags {
    fn apply(&self, p: PartialConfig) -> PartialConfig {
        PartialConfig {
            estimator: self.estimator,
            mu: self.mu,
            lambda: self.lambda,
            window: self.window,
            ridge: self.ridge,
            p0_scale: self.p0_scale,
            paper_literal_recursion: self.paper_literal_recursion.then_some(true),
            task: self.task,
            intercept: self.intercept,
            holdout_every: self.holdout_every,
            holdout_size: self.holdout_size,
            ..p
        }
    }
}

/// Defaults, then the `--config` file, then the flags.
fn merged(stream: &StreamFlags, flags: PartialConfig) -> Result<PartialConfig> {
    let file = match &stream.config {
        Some(path) => PartialConfig::load(path)?,
        None => PartialConfig::default(),
    };
    Ok(file.overlay(flags))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Data(format!("cannot encode JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn generate(args: GenerateArgs) -> Result<()> {
    let p = merged(&args.stream, PartialConfig {
        out: args.out.clone(),
        ..args.stream.partial()
    })?;
    let out = p.out.clone();
    let cfg = p.resolve()?;
    if cfg.stream == StreamKind::Csv {
        return Err(AppError::usage("generate needs a synthetic --stream"));
    }
    let trace = runner::load_trace(&cfg, cfg.seed)?;
    match out {
        Some(path) => crate::csv_io::write_csv(&trace, &path),
        None => write_csv_to(&trace, std::io::stdout().lock(), std::path::Path::new("<stdout>")),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let flags = args.model.apply(PartialConfig {
        out: args.out.clone(),
        ..args.stream.partial()
    });
    let p = merged(&args.stream, flags)?;
    let out = p
        .out
        .clone()
        .ok_or_else(|| AppError::usage("run needs --out <dir>"))?;
    let cfg = p.resolve()?;
    let resume = args.resume.as_deref().map(read_snapshot).transpose()?;
    let art = runner::execute(&cfg, resume, args.until)?;
    runner::write_run_dir(&out, &cfg, &art)?;
    let s = &art.outcome.summary;
    let mut line = format!(
        "samples {}..={}",
        art.start + 1,
        art.start + s.n as u64
    );
    if let Some(a) = s.prequential_accuracy {
        line += &format!("  prequential_accuracy {a:.4}");
    }
    if let Some(h) = s.holdout_mean {
        line += &format!("  holdout_mean {h:.4}");
    }
    line += &format!("  prequential_mse {:.6}", s.prequential_mse);
    if let Some(e) = s.final_quarter_estimate_error {
        line += &format!("  final_quarter_estimate_error {e:.6}");
    }
    emit(&format!("{line}\n"));
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let flags = args.model.apply(PartialConfig {
        out: args.out.clone(),
        mu_grid: args.mu_grid.clone(),
        seeds: args.seeds.clone(),
        ..args.stream.partial()
    });
    let p = merged(&args.stream, flags)?;
    let out = p.out.clone();
    let cfg: RunConfig = p.resolve()?;
    let result = sweep::run_sweep(&cfg)?;
    if let Some(dir) = out {
        sweep::write_sweep_dir(&dir, &cfg, &result)?;
    }
    emit(&sweep::rows_csv(&result));
    Ok(())
}

fn verify_cmd(args: VerifyArgs) -> Result<()> {
    if let Some(path) = &args.snapshot {
        read_snapshot(path)?;
    }
    let recursion = if args.paper_literal_recursion {
        Recursion::PaperLiteral
    } else {
        Recursion::Consistent
    };
    let results = verify::run_all(args.seed, recursion);
    if args.json {
        emit(&json(&results)?);
    } else {
        emit(&verify::report(&results));
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(AppError::Verify(format!("FAILED: {}", failed.join(", "))))
    }
}

fn bound_cmd(args: BoundArgs) -> Result<()> {
    let text = if let Some(dir) = &args.run_dir {
        json(&bound::from_run_dir(dir, args.delta)?)?
    } else if args.montecarlo {
        let defaults = MonteCarloConfig::default();
        let cfg = MonteCarloConfig {
            d: args.d.unwrap_or(defaults.d),
            n: args.n.unwrap_or(defaults.n),
            runs: args.runs.unwrap_or(defaults.runs),
            gamma: args.gamma.unwrap_or(defaults.gamma),
            sigma: args.sigma.unwrap_or(defaults.sigma),
            mu: args.mu.unwrap_or(defaults.mu),
            delta: args.delta,
            p0_scale: args.p0_scale.unwrap_or(defaults.p0_scale),
            seed: args.seed.unwrap_or(defaults.seed),
        };
        let report = bound::montecarlo(&cfg)?;
        if let Some(path) = &args.out {
            runner::write_file(path, &json(&report)?)?;
        }
        json(&bound::MonteCarloSummary::from(&report))?
    } else {
        json(&bound::evaluate(BoundParams {
            k: args.k,
            x_star: args.x_star,
            sigma_star: args.sigma_star,
            gamma_star: args.gamma_star,
            r0_norm: args.r0_norm,
            w_tilde0_norm: args.w_tilde0_norm,
            mu: args.mu.unwrap_or(MonteCarloConfig::default().mu),
            t: args.t,
            delta: args.delta,
        })?)?
    };
    if let (Some(path), false) = (&args.out, args.montecarlo) {
        runner::write_file(path, &text)?;
    }
    emit(&text);
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Bound(a) => bound_cmd(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Failures print one `dfop: error: <kind>: <message>` line to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) => {
            emit(&e.to_string());
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", AppError::usage(msg).line());
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind().exit_code()
        }
    }
}
