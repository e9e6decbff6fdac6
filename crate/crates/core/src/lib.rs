//! Generative active learning for joint communication, sensing and computing
//! radio resource allocation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the pipeline:
//!
//! * [`env`]: the wireless environment oracle scoring an allocation matrix,
//! * [`space`]: the combinatorial state space of partial allocations,
//! * [`nn`]: a small MLP with hand-derived gradients and Adam,
//! * [`gfn`]: a GFlowNet trained with trajectory balance,
//! * [`gp`]: a deep-kernel Gaussian-process surrogate with a Matérn kernel,
//! * [`active`]: the active-learning loop plus MCMC and random baselines.
//!
//! File formats, the experiment harness and the command line live in the
//! `gfnal` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod active;
pub mod env;
mod error;
pub mod gfn;
pub mod gp;
pub mod nn;
pub mod space;

pub use error::{Error, Result};

/// The random number generator used throughout the crate.
///
/// ChaCha8 is portable and reproducible across platforms, which is what the
/// bitwise-determinism contract of the experiment harness relies on.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build a generator from a 64-bit seed and an independent stream id.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
