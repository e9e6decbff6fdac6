use alloc::vec::Vec;

use rand::Rng as _;

use crate::env::Environment;
use crate::space::{enumerate_complete, uniform_complete, AllocationMatrix, MatrixSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub matrix: AllocationMatrix,
    /// Raw network utility from the oracle.
    pub utility: f64,
    /// 0 for the initial dataset.
    pub round: usize,
}

/// Annotated allocations, each at most once, with an oracle-call counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    points: Vec<LabeledPoint>,
    keys: MatrixSet,
    oracle_calls: usize,
}

impl LabeledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }
    pub fn contains(&self, x: &AllocationMatrix) -> bool {
        self.keys.contains(x)
    }
    /// Every annotated matrix, for de-duplicating proposals.
    pub fn keys(&self) -> &MatrixSet {
        &self.keys
    }

    /// Query the oracle on `x` and store the result. Matrices already in
    /// the dataset are rejected without spending an oracle call.
    pub fn annotate(&mut self, env: &Environment, x: AllocationMatrix, round: usize) -> Result<f64> {
        if self.keys.contains(&x) {
            return Err(Error::InvalidConfig(alloc::format!("{x} is already annotated")));
        }
        let utility = env.utility(&x)?;
        self.oracle_calls += 1;
        self.keys.insert(x.clone());
        self.points.push(LabeledPoint { matrix: x, utility, round });
        Ok(utility)
    }

    pub fn best(&self) -> Option<&LabeledPoint> {
        self.points
            .iter()
            .max_by(|a, b| a.utility.total_cmp(&b.utility))
    }
}

/// `n0` distinct uniformly random complete allocations, annotated. When the
/// instance has no more than `n0` complete states, all of them are used.
pub fn init_dataset(env: &Environment, n0: usize, rng: &mut crate::Rng) -> Result<LabeledDataset> {
    if n0 < 2 {
        return Err(Error::TooFewPoints { need: 2, got: n0 });
    }
    let dims = env.config.dims();
    let mut data = LabeledDataset::new();
    match dims.complete_count() {
        Some(count) if count <= 4 * n0 as u128 => {
            // Small space: sample without replacement from the enumeration.
            let mut all = enumerate_complete(dims, count)?;
            let take = n0.min(all.len());
            for i in 0..take {
                let j = rng.gen_range(i..all.len());
                all.swap(i, j);
            }
            for x in all.into_iter().take(take) {
                data.annotate(env, x, 0)?;
            }
        }
        _ => {
            while data.len() < n0 {
                let x = uniform_complete(dims, rng);
                if !data.contains(&x) {
                    data.annotate(env, x, 0)?;
                }
            }
        }
    }
    Ok(data)
}
