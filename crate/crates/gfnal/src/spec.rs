//! Experiment specification files.
//!
//! A spec is a flat TOML document. Every key is optional; anything left out
//! takes the default shown by `ExperimentSpec::default()`. Unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};

use gfnal_core::active::{AlConfig, ChainConfig, Method};
use gfnal_core::env::{ChannelScales, MetricScales, ScenarioConfig, UtilityWeights};
use gfnal_core::gfn::GfnTrainConfig;
use gfnal_core::gp::{EmbeddingConfig, GpConfig};
use gfnal_core::space::DEFAULT_ENUMERATION_CAP;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub servers: usize,
    pub subcarriers: usize,
    pub devices: usize,
    pub bandwidth_hz: f64,
    /// CPU cycles per second, same for every server.
    pub server_capacity: f64,
    pub transmit_power_w: f64,
    pub noise_power_w: f64,
    pub ofdm_symbols: u32,
    pub symbol_duration_s: f64,
    /// Task loads are drawn uniformly from `[task_load_min, task_load_max]`
    /// cycles with the scenario seed.
    pub task_load_min: f64,
    pub task_load_max: f64,
    pub weight_rate: f64,
    pub weight_sensing: f64,
    pub weight_latency: f64,
    pub rate_scale_bps: f64,
    pub sensing_scale_bits: f64,
    pub latency_scale_s: f64,
    pub uplink_snr_db: f64,
    pub sensing_snr_db: f64,
    pub cross_attenuation_db: f64,
    pub scenario_seed: u64,

    pub methods: Vec<String>,
    /// One run per (method, seed). The seed also selects the channel
    /// realization.
    pub seeds: Vec<u64>,
    pub rounds: usize,
    pub batch: usize,
    pub initial: usize,
    pub output_dir: PathBuf,
    pub ucb_beta: f64,
    pub reward_exponent: f64,

    pub gfn_trajectories: usize,
    pub gfn_minibatch: usize,
    pub gfn_policy_lr: f64,
    pub gfn_log_z_lr: f64,
    pub gfn_exploration: f64,
    pub gfn_reward_floor: f64,
    pub gfn_hidden: Vec<usize>,
    pub gfn_warm_start: bool,

    pub mcmc_burn_in: usize,
    pub mcmc_thinning: usize,
    pub mcmc_relocate_prob: f64,
    pub mcmc_retry_factor: usize,

    pub embedding_hidden: Vec<usize>,
    pub embedding_dim: usize,
    pub embedding_epochs: usize,
    pub embedding_minibatch: usize,
    pub embedding_lr: f64,
    pub gp_length_scale_factors: Vec<f64>,
    pub gp_signal_variances: Vec<f64>,
    pub gp_noise_variances: Vec<f64>,
    pub gp_nu: f64,
    pub gp_jitter: f64,
    pub gp_max_jitter: f64,

    pub enumeration_cap: u64,
    /// Write measured wall-clock milliseconds into `rounds.csv`. Off by
    /// default so repeated runs produce identical files.
    pub record_wall_ms: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let al = AlConfig::default();
        let channel = ChannelScales::default();
        let scales = MetricScales::default();
        let weights = UtilityWeights::default();
        Self {
            servers: 3,
            subcarriers: 5,
            devices: 10,
            bandwidth_hz: 300e3,
            server_capacity: 10e9,
            transmit_power_w: 0.2,
            noise_power_w: 1e-13,
            ofdm_symbols: 10,
            symbol_duration_s: 5e-6,
            task_load_min: 1e9,
            task_load_max: 2e9,
            weight_rate: weights.rate,
            weight_sensing: weights.sensing,
            weight_latency: weights.latency,
            rate_scale_bps: scales.rate,
            sensing_scale_bits: scales.sensing,
            latency_scale_s: scales.latency,
            uplink_snr_db: channel.uplink_snr_db,
            sensing_snr_db: channel.sensing_snr_db,
            cross_attenuation_db: channel.cross_attenuation_db,
            scenario_seed: 0,

            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            seeds: vec![0],
            rounds: al.rounds,
            batch: al.batch,
            initial: al.initial,
            output_dir: PathBuf::from("out"),
            ucb_beta: al.ucb_beta,
            reward_exponent: al.reward_exponent,

            gfn_trajectories: al.gfn.trajectories,
            gfn_minibatch: al.gfn.minibatch,
            gfn_policy_lr: al.gfn.policy_lr,
            gfn_log_z_lr: al.gfn.log_z_lr,
            gfn_exploration: al.gfn.exploration,
            gfn_reward_floor: al.gfn.reward_floor,
            gfn_hidden: al.gfn.hidden.clone(),
            gfn_warm_start: al.gfn.warm_start,

            mcmc_burn_in: al.chain.burn_in,
            mcmc_thinning: al.chain.thinning,
            mcmc_relocate_prob: al.chain.relocate_prob,
            mcmc_retry_factor: al.chain.retry_factor,

            embedding_hidden: al.gp.embedding.hidden.clone(),
            embedding_dim: al.gp.embedding.output_dim,
            embedding_epochs: al.gp.embedding.epochs,
            embedding_minibatch: al.gp.embedding.minibatch,
            embedding_lr: al.gp.embedding.lr,
            gp_length_scale_factors: al.gp.length_scale_factors.clone(),
            gp_signal_variances: al.gp.signal_variances.clone(),
            gp_noise_variances: al.gp.noise_variances.clone(),
            gp_nu: al.gp.nu,
            gp_jitter: al.gp.jitter,
            gp_max_jitter: al.gp.max_jitter,

            enumeration_cap: DEFAULT_ENUMERATION_CAP as u64,
            record_wall_ms: false,
        }
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Invalid(msg.into())
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Invalid(msg) => invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec fields are all representable in TOML")
    }

    pub fn scenario(&self) -> Result<ScenarioConfig, HarnessError> {
        if self.devices > self.servers * self.subcarriers {
            return Err(invalid(format!(
                "devices ({}) must not exceed servers x subcarriers ({} x {} = {})",
                self.devices,
                self.servers,
                self.subcarriers,
                self.servers * self.subcarriers
            )));
        }
        ScenarioConfig::builder(self.servers, self.subcarriers, self.devices)
            .bandwidth_hz(self.bandwidth_hz)
            .uniform_server_capacity(self.server_capacity)
            .uniform_transmit_power(self.transmit_power_w)
            .noise_power(self.noise_power_w)
            .ofdm_symbols(self.ofdm_symbols)
            .symbol_duration_s(self.symbol_duration_s)
            .task_load_range(self.task_load_min, self.task_load_max)
            .uniform_weights(UtilityWeights {
                rate: self.weight_rate,
                sensing: self.weight_sensing,
                latency: self.weight_latency,
            })
            .metric_scales(MetricScales {
                rate: self.rate_scale_bps,
                sensing: self.sensing_scale_bits,
                latency: self.latency_scale_s,
            })
            .channel_scales(ChannelScales {
                uplink_snr_db: self.uplink_snr_db,
                sensing_snr_db: self.sensing_snr_db,
                cross_attenuation_db: self.cross_attenuation_db,
            })
            .seed(self.scenario_seed)
            .build()
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn gfn_config(&self) -> GfnTrainConfig {
        GfnTrainConfig {
            trajectories: self.gfn_trajectories,
            minibatch: self.gfn_minibatch,
            policy_lr: self.gfn_policy_lr,
            log_z_lr: self.gfn_log_z_lr,
            exploration: self.gfn_exploration,
            reward_floor: self.gfn_reward_floor,
            hidden: self.gfn_hidden.clone(),
            warm_start: self.gfn_warm_start,
        }
    }

    pub fn al_config(&self) -> Result<AlConfig, HarnessError> {
        let gfn = self.gfn_config();
        gfn.validate().map_err(|e| invalid(e.to_string()))?;
        if self.initial < 2 {
            return Err(invalid(format!("initial must be at least 2, got {}", self.initial)));
        }
        if !(self.reward_exponent > 0.0 && self.reward_exponent.is_finite()) {
            return Err(invalid("reward_exponent must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.mcmc_relocate_prob) {
            return Err(invalid("mcmc_relocate_prob must lie in [0, 1]"));
        }
        if self.embedding_dim == 0 || self.embedding_minibatch == 0 || !(self.embedding_lr > 0.0) {
            return Err(invalid("embedding_dim, embedding_minibatch and embedding_lr must be positive"));
        }
        let grids = [
            &self.gp_length_scale_factors,
            &self.gp_signal_variances,
        ];
        if grids.iter().any(|g| g.is_empty() || g.iter().any(|v| !(*v > 0.0))) {
            return Err(invalid("GP length-scale and signal-variance grids must be non-empty and positive"));
        }
        if self.gp_noise_variances.is_empty() || self.gp_noise_variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("gp_noise_variances must be non-empty and non-negative"));
        }
        Ok(AlConfig {
            rounds: self.rounds,
            batch: self.batch,
            initial: self.initial,
            ucb_beta: self.ucb_beta,
            reward_exponent: self.reward_exponent,
            gp: GpConfig {
                embedding: EmbeddingConfig {
                    hidden: self.embedding_hidden.clone(),
                    output_dim: self.embedding_dim,
                    epochs: self.embedding_epochs,
                    minibatch: self.embedding_minibatch,
                    lr: self.embedding_lr,
                },
                length_scale_factors: self.gp_length_scale_factors.clone(),
                signal_variances: self.gp_signal_variances.clone(),
                noise_variances: self.gp_noise_variances.clone(),
                nu: self.gp_nu,
                jitter: self.gp_jitter,
                max_jitter: self.gp_max_jitter,
            },
            gfn,
            chain: ChainConfig {
                burn_in: self.mcmc_burn_in,
                thinning: self.mcmc_thinning,
                relocate_prob: self.mcmc_relocate_prob,
                retry_factor: self.mcmc_retry_factor,
            },
        })
    }

    pub fn method_list(&self) -> Result<Vec<Method>, HarnessError> {
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        let mut out = Vec::with_capacity(self.methods.len());
        for name in &self.methods {
            let m: Method = name.parse().map_err(|e: gfnal_core::Error| invalid(e.to_string()))?;
            if out.contains(&m) {
                return Err(invalid(format!("method {m} listed twice")));
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Check everything a run needs, without running anything.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario()?;
        self.al_config()?;
        self.method_list()?;
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(invalid(format!("seed {dup} listed twice")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let spec = ExperimentSpec::from_toml("").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        spec.validate().unwrap();
        assert_eq!(spec.al_config().unwrap(), AlConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentSpec::from_toml("server = 2").unwrap_err();
        assert!(err.to_string().contains("server"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut spec = ExperimentSpec::default();
        spec.seeds = vec![3, 1, 4];
        spec.cross_attenuation_db = -12.5;
        let back = ExperimentSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn infeasible_dimensions_name_the_constraint() {
        let spec = ExperimentSpec::from_toml("servers = 2\nsubcarriers = 2\ndevices = 5").unwrap();
        let msg = spec.validate().unwrap_err().to_string();
        assert!(msg.contains("devices (5) must not exceed servers x subcarriers"), "{msg}");
    }

    #[test]
    fn bad_method_and_empty_seeds() {
        let spec = ExperimentSpec::from_toml("methods = [\"ppo\"]").unwrap();
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::from_toml("seeds = []").unwrap();
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::from_toml("methods = [\"mcmc\", \"mcmc\"]").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn negative_infinite_attenuation_is_accepted() {
        let spec = ExperimentSpec::from_toml("cross_attenuation_db = -inf").unwrap();
        spec.validate().unwrap();
    }
}
