use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Exp1};

use super::ScenarioConfig;

/// Power gains of one scheduling slot, static for the whole slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    servers: usize,
    subcarriers: usize,
    devices: usize,
    /// `[d][m][w]`
    uplink: Vec<f64>,
    /// `[d][d'][w]`, zero on the diagonal
    cross: Vec<f64>,
    /// `[d][w]`
    target: Vec<f64>,
}

impl ChannelRealization {
    /// Assemble a realization from explicit arrays (row-major in the index
    /// order given on each field). Panics on inconsistent lengths or
    /// negative gains.
    pub fn from_parts(
        servers: usize,
        subcarriers: usize,
        devices: usize,
        uplink: Vec<f64>,
        mut cross: Vec<f64>,
        target: Vec<f64>,
    ) -> Self {
        assert_eq!(uplink.len(), devices * servers * subcarriers, "uplink length");
        assert_eq!(cross.len(), devices * devices * subcarriers, "cross length");
        assert_eq!(target.len(), devices * subcarriers, "target length");
        assert!(
            uplink.iter().chain(&cross).chain(&target).all(|&g| g >= 0.0),
            "gains must be non-negative"
        );
        for d in 0..devices {
            for w in 0..subcarriers {
                cross[(d * devices + d) * subcarriers + w] = 0.0;
            }
        }
        Self {
            servers,
            subcarriers,
            devices,
            uplink,
            cross,
            target,
        }
    }

    /// `g[d][m][w]`: uplink gain from device `d` to server `m`.
    #[inline]
    pub fn uplink(&self, device: usize, server: usize, subcarrier: usize) -> f64 {
        assert!(device < self.devices && server < self.servers && subcarrier < self.subcarriers);
        self.uplink[(device * self.servers + server) * self.subcarriers + subcarrier]
    }

    /// `g[d][d'][w]`: gain from device `other` into device `device`.
    #[inline]
    pub fn cross(&self, device: usize, other: usize, subcarrier: usize) -> f64 {
        assert!(device < self.devices && other < self.devices && subcarrier < self.subcarriers);
        self.cross[(device * self.devices + other) * self.subcarriers + subcarrier]
    }

    /// `|Q[d][w]|^2`: squared target frequency response.
    #[inline]
    pub fn target_response(&self, device: usize, subcarrier: usize) -> f64 {
        assert!(device < self.devices && subcarrier < self.subcarriers);
        self.target[device * self.subcarriers + subcarrier]
    }

    pub fn uplink_gains(&self) -> &[f64] {
        &self.uplink
    }
    pub fn cross_gains(&self) -> &[f64] {
        &self.cross
    }
    pub fn target_responses(&self) -> &[f64] {
        &self.target
    }

    /// Apply a subcarrier permutation: new subcarrier `w` carries the gains
    /// of old subcarrier `perm[w]`.
    pub fn permute_subcarriers(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.subcarriers);
        let w_n = self.subcarriers;
        let remap = |src: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; src.len()];
            for (row_out, row_in) in out.chunks_mut(w_n).zip(src.chunks(w_n)) {
                for (w, &p) in perm.iter().enumerate() {
                    row_out[w] = row_in[p];
                }
            }
            out
        };
        Self {
            uplink: remap(&self.uplink),
            cross: remap(&self.cross),
            target: remap(&self.target),
            ..*self
        }
    }

    /// Mutable access for sensitivity experiments.
    pub fn set_uplink(&mut self, device: usize, server: usize, subcarrier: usize, gain: f64) {
        assert!(gain >= 0.0);
        let i = (device * self.servers + server) * self.subcarriers + subcarrier;
        self.uplink[i] = gain;
    }

    pub fn set_cross(&mut self, device: usize, other: usize, subcarrier: usize, gain: f64) {
        assert!(gain >= 0.0 && device != other);
        let i = (device * self.devices + other) * self.subcarriers + subcarrier;
        self.cross[i] = gain;
    }
}

/// Draw a Rayleigh-fading realization: every power gain is an independent
/// exponential variable whose mean follows the scenario's channel scales.
pub fn sample_channels(cfg: &ScenarioConfig, seed: u64) -> ChannelRealization {
    let (m_n, w_n, u_n) = (cfg.servers(), cfg.subcarriers(), cfg.devices());
    let mut rng = crate::rng_stream(seed, 0);
    let mut draw = |mean: f64| -> f64 {
        let e: f64 = Exp1.sample(&mut rng);
        mean * e
    };

    let mut uplink = Vec::with_capacity(u_n * m_n * w_n);
    for d in 0..u_n {
        let mean = cfg.mean_uplink_gain(d);
        for _ in 0..m_n * w_n {
            uplink.push(draw(mean));
        }
    }
    let mut cross = vec![0.0; u_n * u_n * w_n];
    for d in 0..u_n {
        for other in 0..u_n {
            if other == d {
                continue;
            }
            let mean = cfg.mean_cross_gain(other);
            for w in 0..w_n {
                cross[(d * u_n + other) * w_n + w] = draw(mean);
            }
        }
    }
    let mut target = Vec::with_capacity(u_n * w_n);
    for d in 0..u_n {
        let mean = cfg.mean_target_response(d);
        for _ in 0..w_n {
            target.push(draw(mean));
        }
    }
    ChannelRealization {
        servers: m_n,
        subcarriers: w_n,
        devices: u_n,
        uplink,
        cross,
        target,
    }
}
