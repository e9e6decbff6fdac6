use alloc::vec::Vec;

use rand::Rng as _;

use super::Proposal;
use crate::space::{uniform_complete, AllocationMatrix, Dims, MatrixSet};

/// Metropolis-Hastings chain settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub burn_in: usize,
    /// Steps between collected samples.
    pub thinning: usize,
    /// Probability of a relocation move; a swap move otherwise.
    pub relocate_prob: f64,
    /// Collected samples are capped at this multiple of the batch size.
    pub retry_factor: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thinning: 100,
            relocate_prob: 0.5,
            retry_factor: 20,
        }
    }
}

/// A Metropolis-Hastings chain over complete allocations targeting
/// `exp(log_reward)`.
///
/// Moves pick a uniformly random device and either relocate it to a
/// uniformly random free block or swap blocks with another uniformly random
/// device. Both moves are symmetric, so the acceptance ratio is the reward
/// ratio. When no block is free only swaps are used, and with a single
/// device only relocations.
pub struct MhChain<'a> {
    state: AllocationMatrix,
    log_r: f64,
    log_reward: &'a dyn Fn(&AllocationMatrix) -> f64,
    relocate_prob: f64,
    proposed: u64,
    accepted: u64,
}

impl<'a> MhChain<'a> {
    pub fn new(
        start: AllocationMatrix,
        log_reward: &'a dyn Fn(&AllocationMatrix) -> f64,
        relocate_prob: f64,
    ) -> Self {
        assert!(start.is_complete(), "chain states are complete allocations");
        let log_r = log_reward(&start);
        Self {
            state: start,
            log_r,
            log_reward,
            relocate_prob,
            proposed: 0,
            accepted: 0,
        }
    }

    pub fn state(&self) -> &AllocationMatrix {
        &self.state
    }
    pub fn proposed(&self) -> u64 {
        self.proposed
    }
    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    fn propose(&self, rng: &mut crate::Rng) -> AllocationMatrix {
        let dims = self.state.dims();
        let mut next = self.state.clone();
        let can_relocate = dims.cells() > dims.devices;
        let can_swap = dims.devices > 1;
        let relocate = match (can_relocate, can_swap) {
            (true, true) => rng.gen::<f64>() < self.relocate_prob,
            (r, _) => r,
        };
        let device = rng.gen_range(0..dims.devices);
        if relocate {
            let free = next.free_blocks();
            let (m, w) = free[rng.gen_range(0..free.len())];
            next.relocate(device, m, w).expect("target block is free");
        } else if can_swap {
            let mut other = rng.gen_range(0..dims.devices - 1);
            if other >= device {
                other += 1;
            }
            next.swap_devices(device, other);
        }
        next
    }

    /// One proposal plus accept/reject. Returns whether it was accepted.
    pub fn step(&mut self, rng: &mut crate::Rng) -> bool {
        let candidate = self.propose(rng);
        let log_r = (self.log_reward)(&candidate);
        self.proposed += 1;
        let log_ratio = log_r - self.log_r;
        let accept = log_ratio >= 0.0 || libm::log(rng.gen::<f64>()) < log_ratio;
        if accept {
            self.state = candidate;
            self.log_r = log_r;
            self.accepted += 1;
        }
        accept
    }
}

/// Run one chain from a uniformly random start and collect up to `b`
/// distinct thinned states that are not in `exclude`.
pub fn mcmc_propose(
    log_reward: &dyn Fn(&AllocationMatrix) -> f64,
    dims: Dims,
    b: usize,
    chain: &ChainConfig,
    rng: &mut crate::Rng,
    exclude: &MatrixSet,
) -> Proposal {
    let mut matrices = Vec::with_capacity(b);
    if b == 0 {
        return Proposal { matrices, short: false };
    }
    let start = uniform_complete(dims, rng);
    let mut mh = MhChain::new(start, log_reward, chain.relocate_prob);
    for _ in 0..chain.burn_in {
        mh.step(rng);
    }
    let mut seen = MatrixSet::new();
    let mut draws = 0;
    while matrices.len() < b && draws < chain.retry_factor * b {
        for _ in 0..chain.thinning.max(1) {
            mh.step(rng);
        }
        draws += 1;
        let x = mh.state();
        if !exclude.contains(x) && seen.insert(x.clone()) {
            matrices.push(x.clone());
        }
    }
    Proposal {
        short: matrices.len() < b,
        matrices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_reward_accepts_everything() {
        let dims = Dims::new(2, 3, 4);
        let mut rng = crate::rng_stream(0, 0);
        let flat = |_: &AllocationMatrix| 0.0;
        let mut mh = MhChain::new(uniform_complete(dims, &mut rng), &flat, 0.5);
        for _ in 0..500 {
            assert!(mh.step(&mut rng));
            assert!(mh.state().is_complete());
        }
        assert_eq!(mh.accepted(), mh.proposed());
    }

    #[test]
    fn full_grid_uses_swaps_only() {
        let dims = Dims::new(2, 2, 4);
        let mut rng = crate::rng_stream(1, 0);
        let flat = |_: &AllocationMatrix| 0.0;
        let mut mh = MhChain::new(uniform_complete(dims, &mut rng), &flat, 0.5);
        for _ in 0..100 {
            mh.step(&mut rng);
            assert!(mh.state().is_complete());
        }
    }

    #[test]
    fn proposals_are_distinct_and_excluded() {
        let dims = Dims::new(3, 3, 4);
        let mut rng = crate::rng_stream(2, 0);
        let flat = |_: &AllocationMatrix| 0.0;
        let cfg = ChainConfig { burn_in: 10, thinning: 5, ..Default::default() };
        let p = mcmc_propose(&flat, dims, 8, &cfg, &mut rng, &MatrixSet::new());
        assert_eq!(p.matrices.len(), 8);
        let set: MatrixSet = p.matrices.iter().cloned().collect();
        assert_eq!(set.len(), 8);
        let mut rng = crate::rng_stream(2, 0);
        let q = mcmc_propose(&flat, dims, 8, &cfg, &mut rng, &set);
        assert!(q.matrices.iter().all(|x| !set.contains(x)));
    }
}
