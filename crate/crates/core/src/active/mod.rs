//! The generative active-learning loop and its baseline samplers.

mod dataset;
mod mcmc;
mod random;
mod run;

pub use dataset::{init_dataset, LabeledDataset, LabeledPoint};
pub use mcmc::{mcmc_propose, ChainConfig, MhChain};
pub use random::random_propose;
pub use run::{run_active_learning, AlConfig, AlRun, Method, RoundRecord};

use alloc::vec::Vec;

use crate::space::AllocationMatrix;

/// Candidates proposed by a sampler for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub matrices: Vec<AllocationMatrix>,
    /// Fewer than the requested count were found before the retry cap.
    pub short: bool,
}
