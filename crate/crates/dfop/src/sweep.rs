//! Parallel `mu × seed` sweeps. Every cell of seed `s` sees the same trace
//! and holdout draws as `dfop run --seed s`.

use std::fmt::Write as _;
use std::path::Path;

use dfop_core::eval::{sweep_cell, validate_grid, Stat, SweepCell, SweepResult, SweepRow};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::runner::{load_trace, run_settings, write_file};

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    validate_grid(&cfg.mu_grid, &cfg.seeds)?;
    for (i, mu) in cfg.mu_grid.iter().enumerate() {
        if cfg.mu_grid[..i].contains(mu) {
            return Err(AppError::usage(format!("mu_grid lists {mu:?} twice")));
        }
    }
    for (i, s) in cfg.seeds.iter().enumerate() {
        if cfg.seeds[..i].contains(s) {
            return Err(AppError::usage(format!("seeds lists {s} twice")));
        }
    }
    let traces = cfg
        .seeds
        .par_iter()
        .map(|&s| load_trace(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let settings = run_settings(cfg, &traces[0], 0);
    let jobs: Vec<(usize, f64)> = (0..cfg.seeds.len())
        .flat_map(|i| cfg.mu_grid.iter().map(move |&mu| (i, mu)))
        .collect();
    let choice = cfg.estimator_choice();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(i, mu)| sweep_cell(choice, cfg.p0_scale, &settings, &traces[i], mu, cfg.seeds[i]))
        .collect();
    Ok(SweepResult::from_cells(&cfg.mu_grid, cells))
}

type RowMetric = (&'static str, fn(&SweepRow) -> Option<Stat>);

const ROW_METRICS: [RowMetric; 6] = [
    ("prequential_accuracy", |r| r.prequential_accuracy),
    ("holdout_mean", |r| r.holdout_mean),
    ("prequential_mse", |r| r.prequential_mse),
    ("final_quarter_accuracy", |r| r.final_quarter_accuracy),
    ("final_quarter_mse", |r| r.final_quarter_mse),
    ("final_quarter_estimate_error", |r| r.final_quarter_estimate_error),
];

fn field(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:?}"))
}

/// One row per grid value: `mu,ok,failed,<metric>_mean,<metric>_std,...`.
pub fn rows_csv(result: &SweepResult) -> String {
    let mut out = String::from("mu,ok,failed");
    for (name, _) in ROW_METRICS {
        let _ = write!(out, ",{name}_mean,{name}_std");
    }
    out.push('\n');
    for row in &result.rows {
        let _ = write!(out, "{:?},{},{}", row.mu, row.ok, row.failed);
        for (_, get) in ROW_METRICS {
            let s = get(row);
            let _ = write!(out, ",{},{}", field(s.map(|s| s.mean)), field(s.map(|s| s.std)));
        }
        out.push('\n');
    }
    out
}

/// One row per `(mu, seed)` cell; failed cells carry the error text.
pub fn cells_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "mu,seed,status,prequential_accuracy,holdout_mean,prequential_mse,\
         final_quarter_accuracy,final_quarter_mse,final_quarter_estimate_error,error\n",
    );
    for c in &result.cells {
        let _ = write!(out, "{:?},{},", c.mu, c.seed);
        match &c.outcome {
            Ok(s) => {
                let _ = writeln!(
                    out,
                    "ok,{},{},{:?},{},{:?},{},",
                    field(s.prequential_accuracy),
                    field(s.holdout_mean),
                    s.prequential_mse,
                    field(s.final_quarter_accuracy),
                    s.final_quarter_mse,
                    field(s.final_quarter_estimate_error)
                );
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n', '"'], " ");
                let _ = writeln!(out, "failed,,,,,,,{msg}");
            }
        }
    }
    out
}

#[derive(Serialize)]
struct CellRecord<'a> {
    mu: f64,
    seed: u64,
    summary: Option<&'a dfop_core::eval::RunSummary>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepFile<'a> {
    rows: &'a [SweepRow],
    cells: Vec<CellRecord<'a>>,
}

pub fn sweep_json(result: &SweepResult) -> Result<String> {
    let cells = result
        .cells
        .iter()
        .map(|c| CellRecord {
            mu: c.mu,
            seed: c.seed,
            summary: c.outcome.as_ref().ok(),
            error: c.outcome.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&SweepFile {
        rows: &result.rows,
        cells,
    })
    .map_err(|e| AppError::Data(format!("cannot encode sweep: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_sweep_dir(dir: &Path, cfg: &RunConfig, result: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    write_file(&dir.join("config.toml"), &cfg.to_toml()?)?;
    write_file(&dir.join("sweep.csv"), &rows_csv(result))?;
    write_file(&dir.join("cells.csv"), &cells_csv(result))?;
    write_file(&dir.join("sweep.json"), &sweep_json(result)?)?;
    Ok(())
}
