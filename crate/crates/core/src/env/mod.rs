//! The wireless environment oracle.
//!
//! Given a complete allocation matrix and a frozen channel realization, the
//! oracle computes each device's uplink bitrate, sensing mutual information
//! and edge-processing latency, and folds them into the scalar network
//! utility the optimizer maximizes. Everything here is a pure function of
//! its inputs.

mod channel;
mod config;
mod oracle;

pub use channel::{sample_channels, ChannelRealization};
pub use config::{
    ChannelScales, MetricScales, ScenarioBuilder, ScenarioConfig, UtilityWeights,
};
pub use oracle::{
    bitrate, device_metrics, latency, sensing_info, sinr_comm, sinr_sensing, utility,
    DeviceMetrics, Evaluation,
};

use crate::space::AllocationMatrix;
use crate::Result;

/// A scenario together with its channel realization for one slot.
#[derive(Debug, Clone)]
pub struct Environment {
    pub config: ScenarioConfig,
    pub channels: ChannelRealization,
}

impl Environment {
    pub fn new(config: ScenarioConfig, channels: ChannelRealization) -> Self {
        Self { config, channels }
    }

    /// Scenario with channels drawn from `channel_seed`.
    pub fn sample(config: ScenarioConfig, channel_seed: u64) -> Self {
        let channels = sample_channels(&config, channel_seed);
        Self { config, channels }
    }

    pub fn evaluate(&self, x: &AllocationMatrix) -> Result<Evaluation> {
        utility(x, &self.channels, &self.config)
    }

    /// Total utility of a complete allocation.
    pub fn utility(&self, x: &AllocationMatrix) -> Result<f64> {
        self.evaluate(x).map(|e| e.total)
    }
}
