use alloc::vec::Vec;

use rand::Rng as _;

use super::Proposal;
use crate::space::{enumerate_complete, uniform_complete, Dims, MatrixSet};

/// Below this many complete states a short rejection run falls back to
/// drawing from the explicit remainder.
const FALLBACK_ENUMERATION: u128 = 100_000;

/// `b` distinct complete allocations drawn uniformly from those not in
/// `exclude`, by rejection sampling with a cap of `20 b` draws.
pub fn random_propose(dims: Dims, b: usize, rng: &mut crate::Rng, exclude: &MatrixSet) -> Proposal {
    let mut seen = MatrixSet::new();
    let mut matrices = Vec::with_capacity(b);
    let mut attempts = 0;
    while matrices.len() < b && attempts < 20 * b {
        attempts += 1;
        let x = uniform_complete(dims, rng);
        if !exclude.contains(&x) && seen.insert(x.clone()) {
            matrices.push(x);
        }
    }
    if matrices.len() < b {
        if let Some(count) = dims.complete_count().filter(|&c| c <= FALLBACK_ENUMERATION) {
            let mut rest: Vec<_> = enumerate_complete(dims, count)
                .expect("count is within the cap")
                .into_iter()
                .filter(|x| !exclude.contains(x) && !seen.contains(x))
                .collect();
            while matrices.len() < b && !rest.is_empty() {
                let i = rng.gen_range(0..rest.len());
                matrices.push(rest.swap_remove(i));
            }
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
    use crate::space::DEFAULT_ENUMERATION_CAP;

    #[test]
    fn returns_the_only_remaining_state() {
        let dims = Dims::new(2, 2, 2);
        let all = enumerate_complete(dims, DEFAULT_ENUMERATION_CAP).unwrap();
        for keep in 0..all.len() {
            let exclude: MatrixSet = all.iter().enumerate().filter(|(i, _)| *i != keep).map(|(_, x)| x.clone()).collect();
            let mut rng = crate::rng_stream(keep as u64, 0);
            let p = random_propose(dims, 1, &mut rng, &exclude);
            assert_eq!(p.matrices, alloc::vec![all[keep].clone()]);
            assert!(!p.short);
        }
    }

    #[test]
    fn zero_request_is_empty() {
        let mut rng = crate::rng_stream(0, 0);
        let p = random_propose(Dims::new(3, 3, 3), 0, &mut rng, &MatrixSet::new());
        assert!(p.matrices.is_empty() && !p.short);
    }

    #[test]
    fn exhausted_space_is_short() {
        let dims = Dims::new(1, 2, 2);
        let mut rng = crate::rng_stream(0, 0);
        let p = random_propose(dims, 5, &mut rng, &MatrixSet::new());
        assert_eq!(p.matrices.len(), 2);
        assert!(p.short);
    }
}
