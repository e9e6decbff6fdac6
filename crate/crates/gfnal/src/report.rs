//! Running an experiment and writing its result files.
//!
//! `rounds.csv` has one row per acquisition round with the columns
//! `round,method,seed,batch_max,batch_mean,best_so_far,surrogate_rmse,wall_ms`.
//! Rows are ordered by method (as listed in the spec), then seed (as
//! listed), then round. Empty batches write `NaN` in the batch columns.
//!
//! `summary.json` holds one entry per (method, seed) run with the best
//! allocation found, in the same `1,0;0,2` form the `eval` subcommand
//! accepts, plus the spec that produced it.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use gfnal_core::active::{run_active_learning, AlRun, Method};
use gfnal_core::env::Environment;
use gfnal_core::space::canonical;
use serde::{Deserialize, Serialize};

use crate::spec::ExperimentSpec;
use crate::HarnessError;

pub const ARTIFACT_VERSION: &str = concat!("gfnal/", env!("CARGO_PKG_VERSION"), "/1");

pub const ROUNDS_HEADER: [&str; 8] = [
    "round",
    "method",
    "seed",
    "batch_max",
    "batch_mean",
    "best_so_far",
    "surrogate_rmse",
    "wall_ms",
];

/// Finished run for one (method, seed) pair.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: Method,
    pub seed: u64,
    pub run: AlRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    pub best_allocation: String,
    pub best_utility: f64,
    /// Best utility in the initial dataset.
    pub initial_best: f64,
    /// `best_so_far` after every round.
    pub best_so_far: Vec<f64>,
    pub oracle_calls: usize,
    pub dataset_size: usize,
    /// Rounds whose sampler returned fewer than `batch` new matrices.
    pub short_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub artifact_version: String,
    /// The spec as JSON. Non-finite numbers appear as `null`.
    pub config: serde_json::Value,
    pub runs: Vec<RunSummary>,
}

impl Summary {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Run every (method, seed) pair of the spec in order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunOutcome>, HarnessError> {
    spec.validate()?;
    let scenario = spec.scenario()?;
    let cfg = spec.al_config()?;
    let started = Instant::now();
    let mut clock = || {
        if spec.record_wall_ms {
            started.elapsed().as_millis() as u64
        } else {
            0
        }
    };
    let mut out = Vec::new();
    for method in spec.method_list()? {
        for &seed in &spec.seeds {
            let env = Environment::sample(scenario.clone(), seed);
            let run = run_active_learning(&env, method, &cfg, seed, &mut clock)
                .map_err(HarnessError::Runtime)?;
            out.push(RunOutcome { method, seed, run });
        }
    }
    Ok(out)
}

fn float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_rounds_csv<W: Write>(outcomes: &[RunOutcome], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUNDS_HEADER)?;
    for o in outcomes {
        for r in &o.run.records {
            w.write_record([
                r.round.to_string(),
                r.method.name().to_string(),
                r.seed.to_string(),
                float(r.batch_max),
                float(r.batch_mean),
                float(r.best_so_far),
                float(r.surrogate_rmse),
                r.wall_ms.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn summarize(spec: &ExperimentSpec, outcomes: &[RunOutcome]) -> Summary {
    let runs = outcomes
        .iter()
        .map(|o| {
            let data = &o.run.dataset;
            let best = data.best().expect("initial dataset is never empty");
            let initial_best = data
                .points()
                .iter()
                .filter(|p| p.round == 0)
                .map(|p| p.utility)
                .fold(f64::NEG_INFINITY, f64::max);
            RunSummary {
                method: o.method.name().to_string(),
                seed: o.seed,
                best_allocation: canonical(&best.matrix),
                best_utility: best.utility,
                initial_best,
                best_so_far: o.run.records.iter().map(|r| r.best_so_far).collect(),
                oracle_calls: data.oracle_calls(),
                dataset_size: data.len(),
                short_rounds: o.run.records.iter().filter(|r| r.short).count(),
            }
        })
        .collect();
    Summary {
        artifact_version: ARTIFACT_VERSION.to_string(),
        config: serde_json::to_value(spec).expect("spec serializes"),
        runs,
    }
}

/// Run the spec and write `rounds.csv` and `summary.json` into `dir`.
pub fn run_to_dir(spec: &ExperimentSpec, dir: &Path) -> Result<Summary, HarnessError> {
    let outcomes = run_experiment(spec)?;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv_path = dir.join("rounds.csv");
    let file = std::fs::File::create(&csv_path).map_err(|source| HarnessError::Io {
        path: csv_path.clone(),
        source,
    })?;
    write_rounds_csv(&outcomes, std::io::BufWriter::new(file))?;
    let summary = summarize(spec, &outcomes);
    let json_path = dir.join("summary.json");
    std::fs::write(&json_path, summary.to_json() + "\n").map_err(|source| HarnessError::Io {
        path: json_path,
        source,
    })?;
    Ok(summary)
}
