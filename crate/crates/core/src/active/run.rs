use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{init_dataset, mcmc_propose, random_propose, ChainConfig, LabeledDataset, Proposal};
use crate::env::Environment;
use crate::gfn::{sample_batch, train_round, GfnModel, GfnTrainConfig};
use crate::gp::{GpConfig, GpModel};
use crate::space::AllocationMatrix;
use crate::{Error, Result};

/// Candidate generator used in each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gflownet,
    Mcmc,
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gflownet, Method::Mcmc, Method::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gflownet => "gflownet",
            Method::Mcmc => "mcmc",
            Method::Random => "random",
        }
    }

    fn stream(&self) -> u64 {
        match self {
            Method::Gflownet => 10,
            Method::Mcmc => 11,
            Method::Random => 12,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gflownet" | "gfn" => Ok(Method::Gflownet),
            "mcmc" => Ok(Method::Mcmc),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidConfig(alloc::format!("unknown method {other:?}"))),
        }
    }
}

/// Settings of one active-learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlConfig {
    /// Acquisition rounds `N`.
    pub rounds: usize,
    /// Candidates per round `b`.
    pub batch: usize,
    /// Size of the initial dataset.
    pub initial: usize,
    /// Exploration weight of the upper-confidence reward.
    pub ucb_beta: f64,
    /// Exponent applied to the reward before sampling (`R^k`); 1 leaves it
    /// unchanged.
    pub reward_exponent: f64,
    pub gp: GpConfig,
    pub gfn: GfnTrainConfig,
    pub chain: ChainConfig,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            batch: 16,
            initial: 32,
            ucb_beta: 0.5,
            reward_exponent: 1.0,
            gp: GpConfig::default(),
            gfn: GfnTrainConfig::default(),
            chain: ChainConfig::default(),
        }
    }
}

/// Summary of one acquisition round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub method: Method,
    pub seed: u64,
    /// Number of newly annotated candidates.
    pub batch_size: usize,
    pub short: bool,
    /// NaN when the batch is empty.
    pub batch_max: f64,
    /// NaN when the batch is empty.
    pub batch_mean: f64,
    /// Best utility in the dataset after this round.
    pub best_so_far: f64,
    /// RMSE of the surrogate's log-utility mean on the new batch, before
    /// the batch is added. NaN when the batch is empty.
    pub surrogate_rmse: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct AlRun {
    pub records: Vec<RoundRecord>,
    pub dataset: LabeledDataset,
}

const MIN_UTILITY: f64 = 1e-300;

fn log_utility(u: f64) -> f64 {
    libm::log(u.max(MIN_UTILITY))
}

/// Run the generative active-learning loop with the chosen sampler.
///
/// Every method starts from the same initial dataset for a given `seed`,
/// refits the surrogate each round, proposes `batch` candidates not yet in
/// the dataset and annotates them with the oracle. `clock` returns a
/// millisecond timestamp used only for the `wall_ms` column.
pub fn run_active_learning(
    env: &Environment,
    method: Method,
    cfg: &AlConfig,
    seed: u64,
    clock: &mut dyn FnMut() -> u64,
) -> Result<AlRun> {
    cfg.gfn.validate()?;
    if !(cfg.reward_exponent > 0.0 && cfg.reward_exponent.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!(
            "reward exponent must be positive, got {}",
            cfg.reward_exponent
        )));
    }
    let dims = env.config.dims();
    let mut init_rng = crate::rng_stream(seed, 1);
    let mut gp_rng = crate::rng_stream(seed, 2);
    let mut rng = crate::rng_stream(seed, method.stream());

    let mut dataset = init_dataset(env, cfg.initial, &mut init_rng)?;
    let mut best = dataset
        .best()
        .map(|p| p.utility)
        .unwrap_or(f64::NEG_INFINITY);
    let mut records = Vec::with_capacity(cfg.rounds);
    let mut sampler: Option<GfnModel> = None;

    for round in 1..=cfg.rounds {
        let started = clock();
        let inputs: Vec<Vec<f64>> = dataset.points().iter().map(|p| p.matrix.encode()).collect();
        let targets: Vec<f64> = dataset.points().iter().map(|p| log_utility(p.utility)).collect();
        let surrogate = GpModel::fit(&inputs, &targets, &cfg.gp, &mut gp_rng)?;
        let log_reward = |x: &AllocationMatrix| cfg.reward_exponent * surrogate.log_reward(&x.encode(), cfg.ucb_beta);

        let proposal = match method {
            Method::Random => random_propose(dims, cfg.batch, &mut rng, dataset.keys()),
            Method::Mcmc => mcmc_propose(&log_reward, dims, cfg.batch, &cfg.chain, &mut rng, dataset.keys()),
            Method::Gflownet => {
                let mut model = match sampler.take() {
                    Some(m) if cfg.gfn.warm_start => m,
                    _ => GfnModel::new(dims, &cfg.gfn.hidden, &mut rng),
                };
                let reward = |x: &AllocationMatrix| libm::exp(log_reward(x));
                train_round(&mut model, &reward, &cfg.gfn, &mut rng)?;
                let batch = sample_batch(&model, cfg.batch, &mut rng, dataset.keys());
                sampler = Some(model);
                Proposal {
                    matrices: batch.matrices,
                    short: batch.short,
                }
            }
        };

        let mut utilities = Vec::with_capacity(proposal.matrices.len());
        let mut sq_err = 0.0;
        for x in proposal.matrices {
            let predicted = surrogate.predict(&x.encode()).mean;
            let u = dataset.annotate(env, x, round)?;
            sq_err += (predicted - log_utility(u)) * (predicted - log_utility(u));
            utilities.push(u);
        }
        let n = utilities.len();
        let (batch_max, batch_mean, rmse) = if n == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                utilities.iter().sum::<f64>() / n as f64,
                libm::sqrt(sq_err / n as f64),
            )
        };
        if n > 0 {
            best = best.max(batch_max);
        }
        records.push(RoundRecord {
            round,
            method,
            seed,
            batch_size: n,
            short: proposal.short,
            batch_max,
            batch_mean,
            best_so_far: best,
            surrogate_rmse: rmse,
            wall_ms: clock().saturating_sub(started),
        });
    }
    Ok(AlRun { records, dataset })
}
