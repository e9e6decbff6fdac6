use alloc::vec::Vec;

use rand::Rng as _;

use crate::{Error, Result};

/// Log-softmax over the entries where `mask` is true; masked entries get
/// `-inf`. Stabilized by subtracting the largest unmasked logit.
pub fn masked_log_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if logits.len() != mask.len() {
        return Err(Error::ShapeMismatch {
            expected: logits.len(),
            got: mask.len(),
        });
    }
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllMasked);
    }
    if !max.is_finite() {
        return Err(Error::NonFinite("logits"));
    }
    let sum: f64 = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| libm::exp(l - max))
        .sum();
    let log_norm = max + libm::log(sum);
    Ok(logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { l - log_norm } else { f64::NEG_INFINITY })
        .collect())
}

/// Draw an index with probability `exp(log_probs[i])`. Entries at `-inf`
/// are never returned.
pub fn sample_categorical(log_probs: &[f64], rng: &mut crate::Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &lp) in log_probs.iter().enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        acc += libm::exp(lp);
        if u < acc {
            return i;
        }
        last = Some(i);
    }
    // Rounding left the cumulative sum just below u.
    last.expect("distribution has no support")
}
