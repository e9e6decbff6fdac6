use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::space::Dims;
use crate::{Error, Result};

/// Exponents applied to the normalized rate, sensing and latency metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    pub rate: f64,
    pub sensing: f64,
    pub latency: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            rate: 1.0,
            sensing: 1.0,
            latency: 1.0,
        }
    }
}

/// Normalization denominators that make the utility dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScales {
    /// bits/s
    pub rate: f64,
    /// bits
    pub sensing: f64,
    /// seconds
    pub latency: f64,
}

impl Default for MetricScales {
    fn default() -> Self {
        Self {
            rate: 1e6,
            sensing: 10.0,
            latency: 0.1,
        }
    }
}

/// Mean channel strengths, all in dB.
///
/// Uplink and sensing means are SNRs over the noise floor for the device's
/// own transmit power. Cross-link gains are attenuated relative to the
/// uplink mean; `-inf` switches device-to-device interference off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScales {
    pub uplink_snr_db: f64,
    pub sensing_snr_db: f64,
    pub cross_attenuation_db: f64,
}

impl Default for ChannelScales {
    fn default() -> Self {
        Self {
            uplink_snr_db: 20.0,
            sensing_snr_db: 10.0,
            cross_attenuation_db: -10.0,
        }
    }
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Every physical constant of one network instance.
///
/// Built through [`ScenarioBuilder`], which validates the invariants; the
/// fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    dims: Dims,
    bandwidth_hz: f64,
    server_capacity: Vec<f64>,
    transmit_power: Vec<f64>,
    noise_power: f64,
    ofdm_symbols: u32,
    symbol_duration_s: f64,
    task_load: Vec<f64>,
    weights: Vec<UtilityWeights>,
    metric_scales: MetricScales,
    channel_scales: ChannelScales,
    seed: u64,
}

impl ScenarioConfig {
    pub fn builder(servers: usize, subcarriers: usize, devices: usize) -> ScenarioBuilder {
        ScenarioBuilder::new(servers, subcarriers, devices)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn servers(&self) -> usize {
        self.dims.servers
    }
    pub fn subcarriers(&self) -> usize {
        self.dims.subcarriers
    }
    pub fn devices(&self) -> usize {
        self.dims.devices
    }
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn server_capacity(&self, server: usize) -> f64 {
        self.server_capacity[server]
    }
    pub fn transmit_power(&self, device: usize) -> f64 {
        self.transmit_power[device]
    }
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
    pub fn ofdm_symbols(&self) -> u32 {
        self.ofdm_symbols
    }
    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_duration_s
    }
    pub fn task_load(&self, device: usize) -> f64 {
        self.task_load[device]
    }
    pub fn task_loads(&self) -> &[f64] {
        &self.task_load
    }
    pub fn weights(&self, device: usize) -> UtilityWeights {
        self.weights[device]
    }
    pub fn metric_scales(&self) -> MetricScales {
        self.metric_scales
    }
    pub fn channel_scales(&self) -> ChannelScales {
        self.channel_scales
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean uplink power gain of device `d`.
    pub fn mean_uplink_gain(&self, device: usize) -> f64 {
        db_to_linear(self.channel_scales.uplink_snr_db) * self.noise_power
            / self.transmit_power[device]
    }

    /// Mean squared target response seen by device `d`.
    pub fn mean_target_response(&self, device: usize) -> f64 {
        db_to_linear(self.channel_scales.sensing_snr_db) * self.noise_power
            / self.transmit_power[device]
    }

    /// Mean gain from interferer `other` into device `device`'s echo receiver.
    pub fn mean_cross_gain(&self, other: usize) -> f64 {
        db_to_linear(self.channel_scales.cross_attenuation_db) * self.mean_uplink_gain(other)
    }
}

/// Builder for [`ScenarioConfig`]. Unset fields take the defaults of the
/// reference deployment: 300 kHz subcarriers, 10 GHz servers, 0.2 W
/// devices, 10 OFDM symbols of 5 us, task loads uniform in [1, 2] Gcycles
/// drawn from the scenario seed, unit weights.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    dims: Dims,
    bandwidth_hz: f64,
    server_capacity: Option<Vec<f64>>,
    transmit_power: Option<Vec<f64>>,
    noise_power: f64,
    ofdm_symbols: u32,
    symbol_duration_s: f64,
    task_load: Option<Vec<f64>>,
    task_load_range: (f64, f64),
    weights: Option<Vec<UtilityWeights>>,
    metric_scales: MetricScales,
    channel_scales: ChannelScales,
    seed: u64,
}

/// Stream of the scenario seed that draws task loads.
const TASK_LOAD_STREAM: u64 = 0x7a5c;

impl ScenarioBuilder {
    pub fn new(servers: usize, subcarriers: usize, devices: usize) -> Self {
        Self {
            dims: Dims::new(servers, subcarriers, devices),
            bandwidth_hz: 300e3,
            server_capacity: None,
            transmit_power: None,
            noise_power: 1e-13,
            ofdm_symbols: 10,
            symbol_duration_s: 5e-6,
            task_load: None,
            task_load_range: (1e9, 2e9),
            weights: None,
            metric_scales: MetricScales::default(),
            channel_scales: ChannelScales::default(),
            seed: 0,
        }
    }

    pub fn bandwidth_hz(mut self, hz: f64) -> Self {
        self.bandwidth_hz = hz;
        self
    }
    pub fn server_capacity(mut self, cycles_per_s: Vec<f64>) -> Self {
        self.server_capacity = Some(cycles_per_s);
        self
    }
    pub fn uniform_server_capacity(self, cycles_per_s: f64) -> Self {
        let m = self.dims.servers;
        self.server_capacity(vec![cycles_per_s; m])
    }
    pub fn transmit_power(mut self, watts: Vec<f64>) -> Self {
        self.transmit_power = Some(watts);
        self
    }
    pub fn uniform_transmit_power(self, watts: f64) -> Self {
        let u = self.dims.devices;
        self.transmit_power(vec![watts; u])
    }
    pub fn noise_power(mut self, watts: f64) -> Self {
        self.noise_power = watts;
        self
    }
    pub fn ofdm_symbols(mut self, count: u32) -> Self {
        self.ofdm_symbols = count;
        self
    }
    pub fn symbol_duration_s(mut self, seconds: f64) -> Self {
        self.symbol_duration_s = seconds;
        self
    }
    pub fn task_load(mut self, cycles: Vec<f64>) -> Self {
        self.task_load = Some(cycles);
        self
    }
    /// Range for seeded uniform task loads, used when no explicit loads are set.
    pub fn task_load_range(mut self, low: f64, high: f64) -> Self {
        self.task_load_range = (low, high);
        self
    }
    pub fn weights(mut self, weights: Vec<UtilityWeights>) -> Self {
        self.weights = Some(weights);
        self
    }
    pub fn uniform_weights(self, weights: UtilityWeights) -> Self {
        let u = self.dims.devices;
        self.weights(vec![weights; u])
    }
    pub fn metric_scales(mut self, scales: MetricScales) -> Self {
        self.metric_scales = scales;
        self
    }
    pub fn channel_scales(mut self, scales: ChannelScales) -> Self {
        self.channel_scales = scales;
        self
    }
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn build(self) -> Result<ScenarioConfig> {
        let dims = self.dims;
        if dims.servers == 0 || dims.subcarriers == 0 || dims.devices == 0 {
            return Err(Error::InvalidConfig(format!(
                "servers, subcarriers and devices must be positive (got {}, {}, {})",
                dims.servers, dims.subcarriers, dims.devices
            )));
        }
        if !dims.is_feasible() {
            return Err(Error::Infeasible {
                devices: dims.devices,
                blocks: dims.cells(),
            });
        }
        let (low, high) = self.task_load_range;
        let task_load = match self.task_load {
            Some(v) => v,
            None => {
                if !(low > 0.0 && high >= low && high.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "task load range [{low}, {high}] must be positive and ordered"
                    )));
                }
                let mut rng = crate::rng_stream(self.seed, TASK_LOAD_STREAM);
                (0..dims.devices)
                    .map(|_| if high > low { rng.gen_range(low..high) } else { low })
                    .collect()
            }
        };
        let cfg = ScenarioConfig {
            dims,
            bandwidth_hz: self.bandwidth_hz,
            server_capacity: self
                .server_capacity
                .unwrap_or_else(|| vec![10e9; dims.servers]),
            transmit_power: self
                .transmit_power
                .unwrap_or_else(|| vec![0.2; dims.devices]),
            noise_power: self.noise_power,
            ofdm_symbols: self.ofdm_symbols,
            symbol_duration_s: self.symbol_duration_s,
            task_load,
            weights: self
                .weights
                .unwrap_or_else(|| vec![UtilityWeights::default(); dims.devices]),
            metric_scales: self.metric_scales,
            channel_scales: self.channel_scales,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

fn length(name: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} has {got} entries, expected {expected}"
        )))
    }
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        let d = self.dims;
        length("server_capacity", self.server_capacity.len(), d.servers)?;
        length("transmit_power", self.transmit_power.len(), d.devices)?;
        length("task_load", self.task_load.len(), d.devices)?;
        length("weights", self.weights.len(), d.devices)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_power", self.noise_power)?;
        positive("symbol_duration_s", self.symbol_duration_s)?;
        if self.ofdm_symbols == 0 {
            return Err(Error::InvalidConfig("ofdm_symbols must be positive".into()));
        }
        for &c in &self.server_capacity {
            positive("server_capacity", c)?;
        }
        for &p in &self.transmit_power {
            positive("transmit_power", p)?;
        }
        for &l in &self.task_load {
            positive("task_load", l)?;
        }
        for w in &self.weights {
            for v in [w.rate, w.sensing, w.latency] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "utility weights must be finite and non-negative, got {v}"
                    )));
                }
            }
        }
        let s = self.metric_scales;
        positive("rate scale", s.rate)?;
        positive("sensing scale", s.sensing)?;
        positive("latency scale", s.latency)?;
        let c = self.channel_scales;
        if !c.uplink_snr_db.is_finite() || !c.sensing_snr_db.is_finite() {
            return Err(Error::InvalidConfig("mean SNRs must be finite".into()));
        }
        if c.cross_attenuation_db.is_nan() || c.cross_attenuation_db == f64::INFINITY {
            return Err(Error::InvalidConfig(
                "cross-link attenuation must be finite or -inf".into(),
            ));
        }
        Ok(())
    }
}
