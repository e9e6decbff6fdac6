use alloc::vec::Vec;

use super::{ChannelRealization, ScenarioConfig};
use crate::space::AllocationMatrix;
use crate::{Error, Result};

/// Per-device performance under one allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceMetrics {
    /// bits/s
    pub bitrate: f64,
    /// bits
    pub sensing_info: f64,
    /// seconds
    pub latency: f64,
    /// dimensionless
    pub utility: f64,
}

/// Network utility and its per-device breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: f64,
    pub devices: Vec<DeviceMetrics>,
}

fn check_dims(x: &AllocationMatrix, ch: &ChannelRealization, cfg: &ScenarioConfig) {
    assert_eq!(x.dims(), cfg.dims(), "allocation and scenario dimensions differ");
    debug_assert_eq!(
        ch.uplink_gains().len(),
        cfg.devices() * cfg.servers() * cfg.subcarriers(),
        "channel and scenario dimensions differ"
    );
}

/// Uplink interference plus noise at server `m` on subcarrier `w`, seen by
/// device `d`: every other device transmitting on `w` to any server.
fn uplink_interference(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
    server: usize,
    subcarrier: usize,
) -> f64 {
    let mut sum = 0.0;
    for other_server in 0..cfg.servers() {
        if let Some(other) = x.occupant(other_server, subcarrier) {
            if other != device {
                sum += cfg.transmit_power(other) * ch.uplink(other, server, subcarrier);
            }
        }
    }
    sum + cfg.noise_power()
}

/// Communication SINR of device `d` at server `m` on subcarrier `w`; zero
/// unless `X[m][w] = d`.
pub fn sinr_comm(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
    server: usize,
    subcarrier: usize,
) -> f64 {
    check_dims(x, ch, cfg);
    assert!(device < cfg.devices(), "device {device} out of range");
    if x.occupant(server, subcarrier) != Some(device) {
        return 0.0;
    }
    let signal = cfg.transmit_power(device) * ch.uplink(device, server, subcarrier);
    signal / uplink_interference(x, ch, cfg, device, server, subcarrier)
}

/// Sensing SINR of device `d` on subcarrier `w`.
///
/// Interferers are the devices on the same subcarrier at servers other than
/// the one serving `d`; since a cell holds a single device, that is every
/// other device on `w`. Zero when `d` does not use `w`.
pub fn sinr_sensing(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
    subcarrier: usize,
) -> f64 {
    check_dims(x, ch, cfg);
    assert!(device < cfg.devices(), "device {device} out of range");
    let serving = match x.block_of(device) {
        Some((m, w)) if w == subcarrier => m,
        _ => return 0.0,
    };
    let signal = cfg.transmit_power(device) * ch.target_response(device, subcarrier);
    let mut interference = 0.0;
    for other_server in (0..cfg.servers()).filter(|&m| m != serving) {
        if let Some(other) = x.occupant(other_server, subcarrier) {
            interference += cfg.transmit_power(other) * ch.cross(device, other, subcarrier);
        }
    }
    signal / (interference + cfg.noise_power())
}

/// Throughput `sum_{m,w} omega log2(1 + psi)` in bits/s.
pub fn bitrate(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
) -> f64 {
    // psi is zero on every block but the one the device holds.
    match x.block_of(device) {
        Some((m, w)) => {
            cfg.bandwidth_hz() * libm::log2(1.0 + sinr_comm(x, ch, cfg, device, m, w))
        }
        None => 0.0,
    }
}

/// Sensing mutual information `sum_w 1/2 omega O T_o log2(1 + psi_sens)` in bits.
pub fn sensing_info(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
) -> f64 {
    match x.block_of(device) {
        Some((_, w)) => {
            let window = 0.5 * cfg.bandwidth_hz() * cfg.ofdm_symbols() as f64 * cfg.symbol_duration_s();
            window * libm::log2(1.0 + sinr_sensing(x, ch, cfg, device, w))
        }
        None => 0.0,
    }
}

/// Processing latency in seconds: the serving server's capacity is split
/// evenly over every device it serves, the device itself included.
pub fn latency(x: &AllocationMatrix, cfg: &ScenarioConfig, device: usize) -> f64 {
    assert_eq!(x.dims(), cfg.dims(), "allocation and scenario dimensions differ");
    assert!(device < cfg.devices(), "device {device} out of range");
    let Some((server, _)) = x.block_of(device) else {
        return 0.0;
    };
    let sharing = (0..cfg.subcarriers())
        .filter(|&w| x.occupant(server, w).is_some())
        .count();
    cfg.task_load(device) * sharing as f64 / cfg.server_capacity(server)
}

/// All metrics of device `d`, including its weighted utility
/// `(rate/rate_ref)^a (sens/sens_ref)^b (lat/lat_ref)^-c`.
pub fn device_metrics(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    device: usize,
) -> DeviceMetrics {
    let bitrate = bitrate(x, ch, cfg, device);
    let sensing_info = sensing_info(x, ch, cfg, device);
    let latency = latency(x, cfg, device);
    let w = cfg.weights(device);
    let s = cfg.metric_scales();
    let utility = libm::pow(bitrate / s.rate, w.rate)
        * libm::pow(sensing_info / s.sensing, w.sensing)
        * libm::pow(latency / s.latency, -w.latency);
    DeviceMetrics {
        bitrate,
        sensing_info,
        latency,
        utility,
    }
}

/// Network utility `f = sum_d f_d` of a complete allocation.
pub fn utility(
    x: &AllocationMatrix,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<Evaluation> {
    check_dims(x, ch, cfg);
    if !x.is_complete() {
        return Err(Error::Incomplete {
            assigned: x.assigned_count(),
            devices: cfg.devices(),
        });
    }
    let devices: Vec<DeviceMetrics> = (0..cfg.devices())
        .map(|d| device_metrics(x, ch, cfg, d))
        .collect();
    let total = devices.iter().map(|m| m.utility).sum();
    Ok(Evaluation { total, devices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_channels, UtilityWeights};
    use crate::space::Dims;
    use alloc::vec;

    fn flat_channels(cfg: &ScenarioConfig, uplink: f64, cross: f64, target: f64) -> ChannelRealization {
        let (m, w, u) = (cfg.servers(), cfg.subcarriers(), cfg.devices());
        ChannelRealization::from_parts(
            m,
            w,
            u,
            vec![uplink; u * m * w],
            vec![cross; u * u * w],
            vec![target; u * w],
        )
    }

    #[test]
    fn lone_device_sinr_is_snr() {
        let cfg = ScenarioConfig::builder(1, 1, 1).noise_power(1.0).uniform_transmit_power(1.0).build().unwrap();
        let ch = flat_channels(&cfg, 100.0, 0.0, 3.0);
        let x = AllocationMatrix::parse("1", cfg.dims()).unwrap();
        assert_eq!(sinr_comm(&x, &ch, &cfg, 0, 0, 0), 100.0);
        let rate = bitrate(&x, &ch, &cfg, 0);
        assert!((rate - 300_000.0 * libm::log2(101.0)).abs() < 1e-6);
        assert!((rate - 1.9975e6).abs() / 1.9975e6 < 1e-4);
    }

    #[test]
    fn sensing_reference_value() {
        // psi_sens = 3 -> 1/2 * 3e5 * 10 * 5e-6 * log2(4) = 15 bits
        let cfg = ScenarioConfig::builder(1, 1, 1).noise_power(1.0).uniform_transmit_power(1.0).build().unwrap();
        let ch = flat_channels(&cfg, 1.0, 0.0, 3.0);
        let x = AllocationMatrix::parse("1", cfg.dims()).unwrap();
        assert_eq!(sinr_sensing(&x, &ch, &cfg, 0, 0), 3.0);
        assert!((sensing_info(&x, &ch, &cfg, 0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_zero_off_block() {
        let cfg = ScenarioConfig::builder(2, 2, 2).build().unwrap();
        let ch = sample_channels(&cfg, 3);
        let x = AllocationMatrix::parse("1,0;0,2", cfg.dims()).unwrap();
        assert_eq!(sinr_comm(&x, &ch, &cfg, 0, 1, 1), 0.0);
        assert_eq!(sinr_comm(&x, &ch, &cfg, 0, 0, 1), 0.0);
        assert_eq!(sinr_sensing(&x, &ch, &cfg, 0, 1), 0.0);
    }

    #[test]
    fn unallocated_device_is_zeroed() {
        let cfg = ScenarioConfig::builder(2, 2, 2).build().unwrap();
        let ch = sample_channels(&cfg, 3);
        let x = AllocationMatrix::parse("1,0;0,0", cfg.dims()).unwrap();
        assert_eq!(bitrate(&x, &ch, &cfg, 1), 0.0);
        assert_eq!(sensing_info(&x, &ch, &cfg, 1), 0.0);
        assert_eq!(latency(&x, &cfg, 1), 0.0);
        assert!(matches!(utility(&x, &ch, &cfg), Err(Error::Incomplete { assigned: 1, devices: 2 })));
    }

    #[test]
    fn latency_counts_self() {
        let cfg = ScenarioConfig::builder(2, 4, 5)
            .task_load(vec![1e9; 5])
            .uniform_server_capacity(1e10)
            .build()
            .unwrap();
        let alone = AllocationMatrix::parse("1,0,0,0;2,3,4,5", cfg.dims()).unwrap();
        assert!((latency(&alone, &cfg, 0) - 0.1).abs() < 1e-15);
        assert!((latency(&alone, &cfg, 1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_give_unit_utility() {
        let cfg = ScenarioConfig::builder(2, 2, 2)
            .uniform_weights(UtilityWeights { rate: 0.0, sensing: 0.0, latency: 0.0 })
            .build()
            .unwrap();
        let ch = sample_channels(&cfg, 1);
        let x = AllocationMatrix::parse("1,2;0,0", cfg.dims()).unwrap();
        let eval = utility(&x, &ch, &cfg).unwrap();
        assert_eq!(eval.total, 2.0);
        assert!(eval.devices.iter().all(|m| m.utility == 1.0));
    }

    #[test]
    fn unit_weights_multiply_normalized_metrics() {
        // Normalized metrics (2, 3, 0.5) -> f_d = 12. Pick channel values
        // that realize them exactly on a 1x1x1 instance.
        let rate_ref = 300e3 * libm::log2(1.0 + 15.0) / 2.0; // rate = 2 * ref
        let sens_ref = 0.5 * 300e3 * 10.0 * 5e-6 * libm::log2(1.0 + 3.0) / 3.0;
        let cfg = ScenarioConfig::builder(1, 1, 1)
            .noise_power(1.0)
            .uniform_transmit_power(1.0)
            .task_load(vec![1e9])
            .uniform_server_capacity(1e10)
            .metric_scales(crate::env::MetricScales { rate: rate_ref, sensing: sens_ref, latency: 0.2 })
            .build()
            .unwrap();
        let ch = flat_channels(&cfg, 15.0, 0.0, 3.0);
        let x = AllocationMatrix::parse("1", cfg.dims()).unwrap();
        let m = device_metrics(&x, &ch, &cfg, 0);
        assert!((m.utility - 12.0).abs() < 1e-12, "{}", m.utility);
    }

    #[test]
    fn utility_is_pure() {
        let cfg = ScenarioConfig::builder(3, 5, 10).seed(4).build().unwrap();
        let ch = sample_channels(&cfg, 9);
        let mut rng = crate::rng_stream(1, 1);
        let x = crate::space::uniform_complete(Dims::new(3, 5, 10), &mut rng);
        let a = utility(&x, &ch, &cfg).unwrap();
        let b = utility(&x, &ch, &cfg).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        assert!(a.devices.iter().all(|m| m.latency > 0.0 && m.utility.is_finite()));
    }
}
