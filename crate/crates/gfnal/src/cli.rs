use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gfnal_core::env::{utility, Environment};
use gfnal_core::space::{canonical, enumerate_complete, AllocationMatrix};

use crate::checkpoint::Checkpoint;
use crate::report::run_to_dir;
use crate::sanity::gfn_sanity;
use crate::spec::ExperimentSpec;
use crate::HarnessError;

/// L1 distance at or below which `gfn-sanity` succeeds.
pub const SANITY_L1_THRESHOLD: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "gfnal", version, about = "Generative active learning for joint sensing, communication and computing resource allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (method, seed) pair and write rounds.csv and summary.json.
    Run {
        spec: PathBuf,
        /// Overrides `output_dir` from the spec.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print per-device metrics of one allocation as CSV.
    Eval {
        spec: PathBuf,
        /// Rows separated by `;`, entries by `,`; 0 is a free block and
        /// devices are numbered from 1.
        matrix: String,
        /// Channel seed; defaults to the first seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print every complete allocation with its utility, best first.
    Enumerate {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a sampler on the exact utility of a small instance and report
    /// how far its sampling distribution is from proportional.
    GfnSanity {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `gfn_trajectories` from the spec.
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Write the trained sampler here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn environment(spec: &ExperimentSpec, seed: Option<u64>) -> Result<Environment, HarnessError> {
    let cfg = spec.scenario()?;
    let seed = seed
        .or_else(|| spec.seeds.first().copied())
        .ok_or_else(|| HarnessError::Invalid("no seed given and the spec lists none".into()))?;
    Ok(Environment::sample(cfg, seed))
}

fn invalid(e: gfnal_core::Error) -> HarnessError {
    HarnessError::Invalid(e.to_string())
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Execute a parsed command, writing its report to `out`. Returns the
/// process exit code on completion; errors map through
/// [`HarnessError::exit_code`].
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run { spec, output } => {
            let spec = ExperimentSpec::load(&spec)?;
            spec.validate()?;
            let dir = output.unwrap_or_else(|| spec.output_dir.clone());
            let summary = run_to_dir(&spec, &dir)?;
            for r in &summary.runs {
                writeln!(out, "{} seed {}: best {} at {}", r.method, r.seed, fmt_f64(r.best_utility), r.best_allocation)?;
            }
            writeln!(out, "wrote {}", dir.display())?;
            Ok(0)
        }
        Command::Eval { spec, matrix, seed } => {
            let spec = ExperimentSpec::load(&spec)?;
            let env = environment(&spec, seed)?;
            let x = AllocationMatrix::parse(&matrix, env.config.dims()).map_err(invalid)?;
            let eval = utility(&x, &env.channels, &env.config).map_err(invalid)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["device", "bitrate_bps", "sensing_bits", "latency_s", "utility"])?;
            for (d, m) in eval.devices.iter().enumerate() {
                w.write_record([
                    (d + 1).to_string(),
                    fmt_f64(m.bitrate),
                    fmt_f64(m.sensing_info),
                    fmt_f64(m.latency),
                    fmt_f64(m.utility),
                ])?;
            }
            w.write_record(["total", "", "", "", &fmt_f64(eval.total)])?;
            w.flush()?;
            Ok(0)
        }
        Command::Enumerate { spec, seed } => {
            let spec = ExperimentSpec::load(&spec)?;
            let env = environment(&spec, seed)?;
            let all = enumerate_complete(env.config.dims(), spec.enumeration_cap as u128).map_err(invalid)?;
            let mut scored = Vec::with_capacity(all.len());
            for x in all {
                let u = env.utility(&x).map_err(HarnessError::Runtime)?;
                scored.push((x, u));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["rank", "allocation", "utility"])?;
            for (i, (x, u)) in scored.iter().enumerate() {
                w.write_record([(i + 1).to_string(), canonical(x), fmt_f64(*u)])?;
            }
            w.flush()?;
            Ok(0)
        }
        Command::GfnSanity {
            spec,
            seed,
            trajectories,
            samples,
            checkpoint,
        } => {
            let spec = ExperimentSpec::load(&spec)?;
            let env = environment(&spec, seed)?;
            let mut tc = spec.gfn_config();
            if let Some(t) = trajectories {
                tc.trajectories = t;
            }
            tc.validate().map_err(invalid)?;
            if samples == 0 {
                return Err(HarnessError::Invalid("samples must be positive".into()));
            }
            let seed = seed.or_else(|| spec.seeds.first().copied()).unwrap_or(0);
            let (report, model) = gfn_sanity(&env, &tc, samples, seed, spec.enumeration_cap as u128)
                .map_err(|e| match e {
                    gfnal_core::Error::EnumerationCap { .. } | gfnal_core::Error::Infeasible { .. } => invalid(e),
                    other => HarnessError::Runtime(other),
                })?;
            writeln!(out, "states {}", report.states)?;
            writeln!(out, "trajectories {}", report.trajectories)?;
            writeln!(out, "samples {}", report.samples)?;
            writeln!(out, "l1 {}", fmt_f64(report.l1))?;
            writeln!(out, "log_z {}", fmt_f64(report.log_z))?;
            writeln!(out, "log_sum_reward {}", fmt_f64(report.log_partition))?;
            writeln!(out, "log_z_error {}", fmt_f64(report.log_z_error()))?;
            writeln!(out, "final_loss_median {}", fmt_f64(report.final_loss_median()))?;
            if let Some(path) = checkpoint {
                Checkpoint::from_sampler(&model).save(&path)?;
            }
            Ok(if report.l1 <= SANITY_L1_THRESHOLD { 0 } else { 1 })
        }
    }
}
