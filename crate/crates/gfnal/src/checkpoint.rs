//! Versioned JSON checkpoints for trained networks.
//!
//! A checkpoint stores the layer widths and the flat parameter buffer in
//! the network's own layout, plus what else is needed to rebuild the model:
//! the instance dimensions and `log Z` for a sampler, the kernel
//! hyperparameters for a surrogate embedding.

use std::path::Path;

use gfnal_core::gfn::GfnModel;
use gfnal_core::gp::GpHyperparams;
use gfnal_core::nn::Mlp;
use gfnal_core::space::Dims;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Mlp,
    Sampler {
        servers: usize,
        subcarriers: usize,
        devices: usize,
        log_z: f64,
    },
    Embedding {
        nu: f64,
        length_scale: f64,
        signal_variance: f64,
        noise_variance: f64,
        jitter: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
    #[serde(flatten)]
    pub payload: Payload,
}

impl Checkpoint {
    pub fn from_mlp(net: &Mlp) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            layer_sizes: net.sizes().to_vec(),
            params: net.params().to_vec(),
            payload: Payload::Mlp,
        }
    }

    pub fn from_sampler(model: &GfnModel) -> Self {
        let dims = model.dims();
        Self {
            payload: Payload::Sampler {
                servers: dims.servers,
                subcarriers: dims.subcarriers,
                devices: dims.devices,
                log_z: model.log_z(),
            },
            ..Self::from_mlp(model.policy())
        }
    }

    pub fn from_embedding(net: &Mlp, hyper: &GpHyperparams) -> Self {
        Self {
            payload: Payload::Embedding {
                nu: hyper.nu,
                length_scale: hyper.length_scale,
                signal_variance: hyper.signal_variance,
                noise_variance: hyper.noise_variance,
                jitter: hyper.jitter,
            },
            ..Self::from_mlp(net)
        }
    }

    fn check_version(&self) -> Result<(), HarnessError> {
        if self.version == CHECKPOINT_VERSION {
            Ok(())
        } else {
            Err(HarnessError::Invalid(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )))
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp, HarnessError> {
        self.check_version()?;
        Mlp::from_flat(&self.layer_sizes, self.params.clone()).map_err(|e| HarnessError::Invalid(e.to_string()))
    }

    pub fn to_sampler(&self) -> Result<GfnModel, HarnessError> {
        let Payload::Sampler {
            servers,
            subcarriers,
            devices,
            log_z,
        } = self.payload
        else {
            return Err(HarnessError::Invalid("checkpoint does not hold a sampler".into()));
        };
        let dims = Dims::new(servers, subcarriers, devices);
        GfnModel::from_parts(dims, self.to_mlp()?, log_z).map_err(|e| HarnessError::Invalid(e.to_string()))
    }

    pub fn to_embedding(&self) -> Result<(Mlp, GpHyperparams), HarnessError> {
        let Payload::Embedding {
            nu,
            length_scale,
            signal_variance,
            noise_variance,
            jitter,
        } = self.payload
        else {
            return Err(HarnessError::Invalid("checkpoint does not hold an embedding".into()));
        };
        let hyper = GpHyperparams {
            nu,
            length_scale,
            signal_variance,
            noise_variance,
            jitter,
        };
        hyper.validate().map_err(|e| HarnessError::Invalid(e.to_string()))?;
        Ok((self.to_mlp()?, hyper))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let ck: Self = serde_json::from_str(text).map_err(|e| HarnessError::Invalid(e.to_string()))?;
        ck.check_version()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
