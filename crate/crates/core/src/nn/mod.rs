//! Minimal neural-network substrate: ReLU MLPs with exact reverse-mode
//! gradients, masked categorical distributions and Adam.

mod adam;
mod dist;
mod mlp;

pub use adam::Adam;
pub use dist::{masked_log_softmax, sample_categorical};
pub use mlp::{ForwardCache, Mlp};
