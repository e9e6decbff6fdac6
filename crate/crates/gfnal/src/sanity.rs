//! Proportional-sampling check on instances small enough to enumerate.

use std::collections::BTreeMap;

use gfnal_core::env::Environment;
use gfnal_core::gfn::{sample_terminals, train_round, GfnModel, GfnTrainConfig};
use gfnal_core::space::{enumerate_complete, AllocationMatrix};
use gfnal_core::{rng_stream, Result};

const TRAIN_STREAM: u64 = 20;
const SAMPLE_STREAM: u64 = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct SanityReport {
    pub states: usize,
    pub trajectories: usize,
    pub samples: usize,
    /// `sum_x |empirical(x) - R(x) / sum R|`
    pub l1: f64,
    pub log_z: f64,
    pub log_partition: f64,
    pub loss_trace: Vec<f64>,
}

impl SanityReport {
    pub fn log_z_error(&self) -> f64 {
        (self.log_z - self.log_partition).abs()
    }

    /// Median minibatch loss over the last ten minibatches (fewer if the
    /// trace is shorter). NaN for an empty trace.
    pub fn final_loss_median(&self) -> f64 {
        let start = self.loss_trace.len().saturating_sub(10);
        let mut tail = self.loss_trace[start..].to_vec();
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.sort_by(f64::total_cmp);
        let n = tail.len();
        if n % 2 == 1 {
            tail[n / 2]
        } else {
            0.5 * (tail[n / 2 - 1] + tail[n / 2])
        }
    }
}

/// Train a fresh sampler on the oracle utility itself and compare its
/// sampling distribution with the normalized utility.
pub fn gfn_sanity(
    env: &Environment,
    tc: &GfnTrainConfig,
    samples: usize,
    seed: u64,
    cap: u128,
) -> Result<(SanityReport, GfnModel)> {
    let dims = env.config.dims();
    let states = enumerate_complete(dims, cap)?;
    let mut reward = BTreeMap::new();
    for x in &states {
        reward.insert(x.clone(), env.utility(x)?);
    }
    let total: f64 = reward.values().sum();

    let mut rng = rng_stream(seed, TRAIN_STREAM);
    let mut model = GfnModel::new(dims, &tc.hidden, &mut rng);
    let oracle = |x: &AllocationMatrix| reward[x];
    let loss_trace = train_round(&mut model, &oracle, tc, &mut rng)?;

    let mut rng = rng_stream(seed, SAMPLE_STREAM);
    let mut counts: BTreeMap<AllocationMatrix, usize> = BTreeMap::new();
    for x in sample_terminals(&model, samples, &mut rng) {
        *counts.entry(x).or_default() += 1;
    }
    let l1 = states
        .iter()
        .map(|x| {
            let empirical = *counts.get(x).unwrap_or(&0) as f64 / samples.max(1) as f64;
            (empirical - reward[x] / total).abs()
        })
        .sum();
    let report = SanityReport {
        states: states.len(),
        trajectories: tc.trajectories,
        samples,
        l1,
        log_z: model.log_z(),
        log_partition: total.ln(),
        loss_trace,
    };
    Ok((report, model))
}
